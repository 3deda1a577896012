//! Small-bias sample spaces and the AND test.
//!
//! The sample space is the powering construction: a seed `(x, y)` of two
//! elements of GF(2^m') yields the bits `ζ_i = ⟨x^i, y⟩` for `i < K`, where
//! `⟨·,·⟩` is the GF(2) inner product of coefficient vectors. For a nonzero
//! pattern `c`, `Σ c_i ζ_i = ⟨p_c(x), y⟩` with `p_c(X) = Σ c_i X^i`, a nonzero
//! polynomial of degree below `K`. The sum is balanced unless `p_c(x) = 0`, so
//! the bias of `c` is exactly the root fraction of `p_c`, at most
//! `(K - 1)/2^m'`.
//!
//! The AND test checks that `h` vanishes on `{0,1}^k` with one summation
//! test: for a random seed it verifies `Σ_i ζ_i h(i) = 0` using the weighted
//! summand `Z(x)·h(x)`, where `Z` is the multilinear extension of the bit
//! table `(ζ_i)`.

use std::fmt::Write as _;

use num_rational::Ratio;
use rand::Rng;
use serde_json::json;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldSpec};
use crate::poly::MultilinearFn;
use crate::sumcheck::{run_with_point, RoundProver, SumcheckError, SumcheckParams, SumcheckTranscript};

/// Exhaustive routines accept at most this many indices.
pub const MAX_EXHAUSTIVE_INDICES: usize = 16;
/// Exhaustive routines accept seeds of at most this many bits.
pub const MAX_EXHAUSTIVE_SEED_BITS: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BiasError {
    #[error("seed half-width must be at least 1")]
    NoSeedBits,
    #[error("exhaustive enumeration over {indices} indices and {seed_bits} seed bits is too large")]
    TooLarge { indices: usize, seed_bits: u32 },
    #[error("pattern has {got} entries, expected {expected}")]
    PatternLength { expected: usize, got: usize },
    #[error("the zero pattern has no meaningful bias")]
    ZeroPattern,
    #[error("pattern entries must lie in one field of characteristic two")]
    MixedPattern,
    #[error("AND test needs bias bound at most 1/4, got {0}")]
    BiasTooLarge(Ratio<u64>),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Sumcheck(#[from] SumcheckError),
}

/// A powering sample space with `K = 2^k` indices and seed half-width `m'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BiasedSetSpec {
    k: u32,
    mprime: u32,
    seed_field: FieldSpec,
}

impl BiasedSetSpec {
    pub fn new(k: u32, mprime: u32) -> Result<Self, BiasError> {
        if mprime == 0 {
            return Err(BiasError::NoSeedBits);
        }
        if k > 30 {
            return Err(BiasError::TooLarge {
                indices: usize::MAX,
                seed_bits: 2 * mprime,
            });
        }
        let seed_field = FieldSpec::binary(mprime)?;
        Ok(BiasedSetSpec { k, mprime, seed_field })
    }

    /// The smallest half-width whose bias bound is at most 1/4.
    pub fn quarter_biased(k: u32) -> Result<Self, BiasError> {
        let indices = 1u64 << k;
        let mut mprime = 1;
        while 4 * (indices - 1) > 1u64 << mprime {
            mprime += 1;
        }
        BiasedSetSpec::new(k, mprime)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn mprime(&self) -> u32 {
        self.mprime
    }

    pub fn indices(&self) -> usize {
        1 << self.k
    }

    pub fn seed_field(&self) -> FieldSpec {
        self.seed_field
    }

    pub fn seed_count(&self) -> u64 {
        1 << (2 * self.mprime)
    }

    /// `(K - 1)/2^m'`.
    pub fn bias_bound(&self) -> Ratio<u64> {
        Ratio::new(self.indices() as u64 - 1, 1 << self.mprime)
    }

    pub fn random_seed<R: Rng + ?Sized>(&self, rng: &mut R) -> Seed {
        Seed {
            x: self.seed_field.random(rng),
            y: self.seed_field.random(rng),
        }
    }

    /// Seed number `s`: the low `m'` bits give `x`, the high bits `y`.
    pub fn seed(&self, s: u64) -> Seed {
        let mask = (1u64 << self.mprime) - 1;
        Seed {
            x: self.seed_field.element_reduced(s & mask),
            y: self.seed_field.element_reduced(s >> self.mprime),
        }
    }

    /// The `K` bits of a seed, bit `i` of the result being `ζ_i`.
    pub fn zeta_mask(&self, seed: &Seed) -> u64 {
        let mut power = self.seed_field.one();
        let mut mask = 0;
        for i in 0..self.indices() {
            mask |= (power.dot_bits(&seed.y) as u64) << i;
            power *= seed.x;
        }
        mask
    }

    fn check_exhaustive(&self) -> Result<(), BiasError> {
        if self.indices() > MAX_EXHAUSTIVE_INDICES || 2 * self.mprime > MAX_EXHAUSTIVE_SEED_BITS {
            return Err(BiasError::TooLarge {
                indices: self.indices(),
                seed_bits: 2 * self.mprime,
            });
        }
        Ok(())
    }
}

/// A seed `(x, y) ∈ GF(2^m')^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed {
    pub x: FieldElement,
    pub y: FieldElement,
}

/// `ζ_i` for seed `(x, y)`.
pub fn zeta(spec: &BiasedSetSpec, seed: &Seed, i: usize) -> bool {
    debug_assert!(i < spec.indices());
    seed.x.pow(i as u64).dot_bits(&seed.y)
}

/// Exact bias of every pattern `c ∈ GF(2)^K`, indexed by the pattern's bits.
/// Entry `c` is the fraction of `x` with `p_c(x) = 0`.
pub fn pattern_biases(spec: &BiasedSetSpec) -> Result<Vec<Ratio<u64>>, BiasError> {
    spec.check_exhaustive()?;
    let kk = spec.indices();
    let field = spec.seed_field;
    let mut roots = vec![0u64; 1 << kk];
    for x in field.elements() {
        let powers: Vec<FieldElement> = (0..kk).map(|i| x.pow(i as u64)).collect();
        // Gray-code walk: consecutive patterns differ in one index.
        let mut value = field.zero();
        roots[0] += 1;
        for step in 1u64..1 << kk {
            let flip = step.trailing_zeros() as usize;
            value += powers[flip];
            let gray = step ^ (step >> 1);
            if value.is_zero() {
                roots[gray as usize] += 1;
            }
        }
    }
    let denom = field.size();
    Ok(roots.into_iter().map(|r| Ratio::new(r, denom)).collect())
}

/// Maximum bias over nonzero patterns, with a pattern attaining it.
pub fn bias_bound_check(spec: &BiasedSetSpec) -> Result<(Ratio<u64>, u64), BiasError> {
    let biases = pattern_biases(spec)?;
    let (worst, bias) = biases
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("K ≥ 1 gives a nonzero pattern");
    Ok((*bias, worst as u64))
}

/// CSV listing `pattern,bias` for every nonzero pattern.
pub fn bias_audit_csv(spec: &BiasedSetSpec) -> Result<String, BiasError> {
    let biases = pattern_biases(spec)?;
    let mut out = String::from("pattern,bias,bias_decimal\n");
    for (c, b) in biases.iter().enumerate().skip(1) {
        let _ = writeln!(out, "{:#x},{},{:.6}", c, b, *b.numer() as f64 / *b.denom() as f64);
    }
    Ok(out)
}

/// Histogram of the `ζ` masks over all seeds.
#[derive(Clone, Debug)]
pub struct ZetaDistribution {
    spec: BiasedSetSpec,
    counts: Vec<u64>,
}

impl ZetaDistribution {
    pub fn new(spec: &BiasedSetSpec) -> Result<Self, BiasError> {
        spec.check_exhaustive()?;
        let mut counts = vec![0u64; 1 << spec.indices()];
        for s in 0..spec.seed_count() {
            counts[spec.zeta_mask(&spec.seed(s)) as usize] += 1;
        }
        Ok(ZetaDistribution { spec: *spec, counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Exact `Pr_seed[Σ_i ζ_i c_i = 0]` for a nonzero `c` over a field of
    /// characteristic two.
    pub fn zero_mass(&self, c: &[FieldElement]) -> Result<Ratio<u64>, BiasError> {
        let kk = self.spec.indices();
        if c.len() != kk {
            return Err(BiasError::PatternLength {
                expected: kk,
                got: c.len(),
            });
        }
        if c.windows(2).any(|w| w[0].modulus() != w[1].modulus()) {
            return Err(BiasError::MixedPattern);
        }
        if c.iter().all(|v| v.is_zero()) {
            return Err(BiasError::ZeroPattern);
        }
        let zero = c[0].zero_like();
        let mut sums = vec![zero; 1 << kk];
        let mut zeros = 0;
        for mask in 0..1usize << kk {
            if mask > 0 {
                let low = mask.trailing_zeros() as usize;
                sums[mask] = sums[mask & (mask - 1)] + c[low];
            }
            if sums[mask].is_zero() {
                zeros += self.counts[mask];
            }
        }
        Ok(Ratio::new(zeros, self.spec.seed_count()))
    }
}

/// `Pr_seed[Σ_i ζ_i c_i = 0]`, see [`ZetaDistribution::zero_mass`].
pub fn zero_mass(spec: &BiasedSetSpec, c: &[FieldElement]) -> Result<Ratio<u64>, BiasError> {
    ZetaDistribution::new(spec)?.zero_mass(c)
}

/// Parameters of an AND test for `h: F^k -> F` of per-variable degree `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AndTestParams {
    pub field: FieldSpec,
    pub k: usize,
    pub d: usize,
    pub bias: BiasedSetSpec,
}

impl AndTestParams {
    /// Uses the smallest quarter-biased sample space for `2^k` indices.
    pub fn new(field: FieldSpec, k: usize, d: usize) -> Result<Self, BiasError> {
        let bias = BiasedSetSpec::quarter_biased(k as u32)?;
        AndTestParams::with_bias(field, k, d, bias)
    }

    pub fn with_bias(field: FieldSpec, k: usize, d: usize, bias: BiasedSetSpec) -> Result<Self, BiasError> {
        if bias.bias_bound() > Ratio::new(1, 4) {
            return Err(BiasError::BiasTooLarge(bias.bias_bound()));
        }
        if bias.k() as usize != k {
            return Err(BiasError::PatternLength {
                expected: 1 << k,
                got: bias.indices(),
            });
        }
        Ok(AndTestParams { field, k, d, bias })
    }

    /// The multilinear extension of the seed's bit table, over the working field.
    pub fn weights(&self, seed: &Seed) -> MultilinearFn {
        let mask = self.bias.zeta_mask(seed);
        let table = (0..self.bias.indices())
            .map(|i| self.field.element_reduced(mask >> i & 1))
            .collect();
        MultilinearFn::extend(table).expect("power-of-two table")
    }

    pub fn sumcheck_params(&self) -> SumcheckParams {
        SumcheckParams::new(self.k.max(1), self.d + 1, self.field.zero())
            .expect("at least one variable")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AndTranscript {
    pub seed: Seed,
    pub weight_at_q: FieldElement,
    pub oracle_value: FieldElement,
    pub sumcheck: SumcheckTranscript,
}

impl AndTranscript {
    pub fn accepted(&self) -> bool {
        self.sumcheck.accepted
    }

    pub fn to_json_lines(&self) -> String {
        let seed = json!({
            "seed_x": format!("{:#x}", self.seed.x.bits()),
            "seed_y": format!("{:#x}", self.seed.y.bits()),
            "weight_at_q": format!("{:#x}", self.weight_at_q.bits()),
            "oracle_value": format!("{:#x}", self.oracle_value.bits()),
        });
        format!("{}\n{}", seed, self.sumcheck.to_json_lines())
    }
}

/// Runs the AND test. `prover` receives the seed and returns the round
/// handler for the weighted summand; `h_oracle` is read once, at the
/// summation test's uniform point.
pub fn run_and_test<O, F, P, R>(
    params: &AndTestParams,
    h_oracle: O,
    prover: F,
    rng: &mut R,
) -> Result<AndTranscript, BiasError>
where
    O: FnOnce(&[FieldElement]) -> FieldElement,
    F: FnOnce(Seed) -> P,
    P: RoundProver,
    R: Rng + ?Sized,
{
    let seed = params.bias.random_seed(rng);
    let weights = params.weights(&seed);
    let sc = params.sumcheck_params();
    let q: Vec<FieldElement> = (0..sc.m).map(|_| params.field.random(rng)).collect();
    let oracle_value = h_oracle(&q[..params.k]);
    let weight_at_q = weights.eval(&q[..params.k]).expect("arity k");
    let sumcheck = run_with_point(&params.field, &sc, q, weight_at_q * oracle_value, prover(seed))?;
    Ok(AndTranscript {
        seed,
        weight_at_q,
        oracle_value,
        sumcheck,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::sumcheck::{HonestProver, LazyCheater};

    /// Direct definition: bias of `c` over all seeds.
    fn brute_bias(spec: &BiasedSetSpec, c: u64) -> Ratio<u64> {
        let mut ones = 0i64;
        let mut total = 0i64;
        for s in 0..spec.seed_count() {
            let seed = spec.seed(s);
            let bit = (0..spec.indices())
                .filter(|&i| c >> i & 1 == 1)
                .fold(false, |acc, i| acc ^ zeta(spec, &seed, i));
            ones += bit as i64;
            total += 1;
        }
        Ratio::new((total - 2 * ones).unsigned_abs(), total as u64)
    }

    #[test]
    fn zero_y_gives_zero_bits() {
        let spec = BiasedSetSpec::new(3, 6).unwrap();
        let f = spec.seed_field();
        for x in f.elements() {
            let seed = Seed { x, y: f.zero() };
            assert_eq!(spec.zeta_mask(&seed), 0);
            assert!((0..8).all(|i| !zeta(&spec, &seed, i)));
        }
    }

    #[test]
    fn fast_biases_match_definition() {
        for (k, mp) in [(1, 3), (2, 2), (2, 4), (3, 3), (3, 6)] {
            let spec = BiasedSetSpec::new(k, mp).unwrap();
            let fast = pattern_biases(&spec).unwrap();
            assert_eq!(fast[0], Ratio::from_integer(1));
            for c in 1..1u64 << spec.indices() {
                assert_eq!(fast[c as usize], brute_bias(&spec, c), "k={k} m'={mp} c={c:#x}");
            }
        }
    }

    #[test]
    fn documented_bias_cases() {
        let (b, _) = bias_bound_check(&BiasedSetSpec::new(1, 3).unwrap()).unwrap();
        assert!(b <= Ratio::new(1, 8));
        let (b, _) = bias_bound_check(&BiasedSetSpec::new(3, 6).unwrap()).unwrap();
        assert!(b <= Ratio::new(7, 64));
    }

    #[test]
    fn bias_never_exceeds_bound() {
        for k in 0..=4 {
            for mp in 1..=8 {
                let spec = BiasedSetSpec::new(k, mp).unwrap();
                let (b, _) = bias_bound_check(&spec).unwrap();
                assert!(b <= spec.bias_bound(), "k={k} m'={mp}: {b}");
            }
        }
    }

    #[test]
    fn shifted_exponents_would_break_the_bound() {
        // With exponents 1..K every pattern polynomial has the root 0, so the
        // all-ones pattern over K=2 and m'=3 already has bias 2/8 > 1/8.
        let spec = BiasedSetSpec::new(1, 3).unwrap();
        let f = spec.seed_field();
        let zeros = f.elements().filter(|&x| (x + x * x).is_zero()).count();
        assert_eq!(zeros, 2);
        assert_eq!(pattern_biases(&spec).unwrap()[3], Ratio::new(1, 8));
    }

    #[test]
    fn exhaustive_guard() {
        assert!(matches!(
            bias_bound_check(&BiasedSetSpec::new(5, 6).unwrap()),
            Err(BiasError::TooLarge { .. })
        ));
        assert!(matches!(
            bias_bound_check(&BiasedSetSpec::new(2, 9).unwrap()),
            Err(BiasError::TooLarge { .. })
        ));
    }

    #[test]
    fn zero_mass_single_component_matches_bias() {
        let spec = BiasedSetSpec::new(3, 6).unwrap();
        let dist = ZetaDistribution::new(&spec).unwrap();
        let biases = pattern_biases(&spec).unwrap();
        let f2 = FieldSpec::binary(1).unwrap();
        for c in 1..256u64 {
            let pattern: Vec<FieldElement> = (0..8).map(|i| f2.element_reduced(c >> i & 1)).collect();
            let mass = dist.zero_mass(&pattern).unwrap();
            // Pr[0] = (1 + bias)/2 for a GF(2) pattern.
            assert_eq!(mass, (Ratio::from_integer(1) + biases[c as usize]) / 2);
        }
        assert_eq!(
            dist.zero_mass(&vec![f2.zero(); 8]),
            Err(BiasError::ZeroPattern)
        );
    }

    #[test]
    fn zero_mass_over_gf4_matches_seed_enumeration() {
        let spec = BiasedSetSpec::new(3, 6).unwrap();
        let dist = ZetaDistribution::new(&spec).unwrap();
        let f = FieldSpec::gf4();
        let mut rng = rng_from_seed(17);
        let bound = (Ratio::from_integer(1) + Ratio::new(7, 64)) / 2;
        for _ in 0..40 {
            let c: Vec<FieldElement> = (0..8).map(|_| f.random(&mut rng)).collect();
            if c.iter().all(|v| v.is_zero()) {
                continue;
            }
            let mut zeros = 0;
            for s in 0..spec.seed_count() {
                let seed = spec.seed(s);
                let sum = (0..8)
                    .filter(|&i| zeta(&spec, &seed, i))
                    .fold(f.zero(), |acc, i| acc + c[i]);
                zeros += sum.is_zero() as u64;
            }
            let mass = dist.zero_mass(&c).unwrap();
            assert_eq!(mass, Ratio::new(zeros, spec.seed_count()));
            assert!(mass <= bound);
        }
    }

    #[test]
    fn quarter_biased_half_widths() {
        assert_eq!(BiasedSetSpec::quarter_biased(0).unwrap().mprime(), 1);
        assert_eq!(BiasedSetSpec::quarter_biased(1).unwrap().mprime(), 2);
        assert_eq!(BiasedSetSpec::quarter_biased(3).unwrap().mprime(), 5);
        assert_eq!(BiasedSetSpec::quarter_biased(6).unwrap().mprime(), 8);
        for k in 0..8 {
            let spec = BiasedSetSpec::quarter_biased(k).unwrap();
            assert!(spec.bias_bound() <= Ratio::new(1, 4));
            if spec.mprime() > 1 {
                let smaller = BiasedSetSpec::new(k, spec.mprime() - 1).unwrap();
                assert!(smaller.bias_bound() > Ratio::new(1, 4));
            }
        }
    }

    #[test]
    fn no_instance_summands_vanish_on_at_most_five_eighths_of_seeds() {
        let f = FieldSpec::gf4();
        for k in 1..=3u32 {
            let spec = BiasedSetSpec::quarter_biased(k).unwrap();
            let dist = ZetaDistribution::new(&spec).unwrap();
            let kk = spec.indices();
            let total = 4u64.pow(kk as u32);
            for code in 1..total {
                let c: Vec<FieldElement> = (0..kk)
                    .map(|i| f.element_reduced(code >> (2 * i) & 3))
                    .collect();
                assert!(dist.zero_mass(&c).unwrap() <= Ratio::new(5, 8));
            }
        }
    }

    #[test]
    fn and_test_accepts_cube_vanishing_summands() {
        let f = FieldSpec::gf64();
        let params = AndTestParams::new(f, 2, 2).unwrap();
        // h = x0 (x0 - 1) vanishes on the cube only.
        let h = |x: &[FieldElement]| x[0] * (x[0] - f.one());
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let t = run_and_test(
                &params,
                h,
                |seed| {
                    let z = params.weights(&seed);
                    HonestProver::new(f, 2, 3, move |x: &[FieldElement]| z.eval(x).unwrap() * h(x))
                },
                &mut rng,
            )
            .unwrap();
            assert!(t.accepted());
            assert_eq!(t.sumcheck.rounds.len(), 2);
        }
    }

    #[test]
    fn and_test_catches_a_nonzero_cube_value() {
        let f = FieldSpec::gf2_18();
        let params = AndTestParams::new(f, 2, 1).unwrap();
        let h = |x: &[FieldElement]| x[0] * x[1];
        let dist = ZetaDistribution::new(&params.bias).unwrap();
        let c: Vec<FieldElement> = (0..4).map(|i| f.element_reduced((i == 3) as u64)).collect();
        let mass = dist.zero_mass(&c).unwrap();
        let mut rng = rng_from_seed(4);
        let trials = 4000;
        let mut accepts = 0;
        for _ in 0..trials {
            let t = run_and_test(
                &params,
                h,
                |seed| {
                    let z = params.weights(&seed);
                    LazyCheater::new(f, 2, 2, move |x: &[FieldElement]| z.eval(x).unwrap() * h(x), f.zero())
                },
                &mut rng,
            )
            .unwrap();
            accepts += t.accepted() as u64;
        }
        let rate = accepts as f64 / trials as f64;
        let expected = *mass.numer() as f64 / *mass.denom() as f64;
        assert!(rate <= 5.0 / 8.0 + 0.03, "rate {rate}");
        assert!((rate - expected).abs() < 0.05, "rate {rate} vs {expected}");
    }

    #[test]
    fn audit_csv_shape() {
        let csv = bias_audit_csv(&BiasedSetSpec::new(3, 6).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 256);
        assert!(csv.starts_with("pattern,bias"));
    }
}
