//! The r-player multilinearity game with classical (shared-randomness)
//! strategies.
//!
//! With probability 1/2 the referee sends one uniform `x ∈ F^n` to every
//! player and accepts iff all answers agree. Otherwise it picks an axis `i`,
//! a uniform `x`, and two distinct values `y_i, z_i ∈ F ∖ {x_i}`; the three
//! points of the axis line go to three distinct players (a uniformly random
//! ordered triple when `r > 3`, players 1, 2, 3 when `r = 3`) and the referee
//! accepts iff the answers are collinear.

use std::path::Path;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::field::{FieldElement, FieldSpec};
use crate::poly::{point_index, points, MultilinearFn, PolyError};
use crate::protocol::{collinear, two_other_values};
use crate::rng::rng_from_seed;

/// Exact evaluation enumerates at most this many referee choices per triple.
pub const MAX_EXACT_WORK: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("the game needs at least three players")]
    TooFewPlayers,
    #[error("the linearity test needs at least four field elements")]
    FieldTooSmall,
    #[error("the game needs at least one variable")]
    NoVariables,
    #[error("table has {got} entries, expected {expected}")]
    TableSize { expected: usize, got: usize },
    #[error("strategy tuple has {got} functions for {expected} players")]
    TupleSize { expected: usize, got: usize },
    #[error("exact evaluation of {0} referee choices exceeds the guard")]
    TooLarge(u128),
    #[error("mixture weights must be positive and sum to 1")]
    BadWeights,
    #[error("descriptor: {0}")]
    Descriptor(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MLGameConfig {
    pub r: usize,
    pub n: usize,
    pub field: FieldSpec,
}

impl MLGameConfig {
    pub fn new(r: usize, n: usize, field: FieldSpec) -> Result<Self, GameError> {
        if r < 3 {
            return Err(GameError::TooFewPlayers);
        }
        if field.size() < 4 {
            return Err(GameError::FieldTooSmall);
        }
        if n == 0 {
            return Err(GameError::NoVariables);
        }
        Ok(MLGameConfig { r, n, field })
    }

    /// `p^n`.
    pub fn points(&self) -> usize {
        (self.field.size() as usize).pow(self.n as u32)
    }

    /// Ordered triples of distinct players used by the linearity test.
    pub fn triples(&self) -> Vec<[usize; 3]> {
        if self.r == 3 {
            return vec![[0, 1, 2]];
        }
        let mut out = Vec::new();
        for a in 0..self.r {
            for b in 0..self.r {
                for c in 0..self.r {
                    if a != b && b != c && a != c {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        out
    }
}

/// A total function `F^n -> F`, stored in [`points`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    n: usize,
    field: FieldSpec,
    values: Vec<FieldElement>,
}

impl FunctionTable {
    pub fn new(field: FieldSpec, n: usize, values: Vec<FieldElement>) -> Result<Self, GameError> {
        let expected = (field.size() as usize).pow(n as u32);
        if values.len() != expected {
            return Err(GameError::TableSize {
                expected,
                got: values.len(),
            });
        }
        Ok(FunctionTable { n, field, values })
    }

    pub fn from_fn(field: FieldSpec, n: usize, f: impl Fn(&[FieldElement]) -> FieldElement) -> Self {
        let values = points(&field, n).map(|x| f(&x)).collect();
        FunctionTable { n, field, values }
    }

    pub fn from_multilinear(field: FieldSpec, g: &MultilinearFn) -> Self {
        FunctionTable::from_fn(field, g.arity(), |x| g.eval(x).expect("arity matches"))
    }

    pub fn random<R: Rng + ?Sized>(field: FieldSpec, n: usize, rng: &mut R) -> Self {
        let len = (field.size() as usize).pow(n as u32);
        FunctionTable {
            n,
            field,
            values: (0..len).map(|_| field.random(rng)).collect(),
        }
    }

    /// Replaces `round(rate·p^n)` uniformly chosen entries by fresh uniform values.
    pub fn perturbed<R: Rng + ?Sized>(&self, rate: f64, rng: &mut R) -> Self {
        let count = ((rate.clamp(0.0, 1.0)) * self.values.len() as f64).round() as usize;
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.shuffle(rng);
        let mut out = self.clone();
        for &i in &idx[..count] {
            out.values[i] = self.field.random(rng);
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn at(&self, x: &[FieldElement]) -> FieldElement {
        self.values[point_index(&self.field, x) as usize]
    }

    pub fn at_index(&self, idx: usize) -> FieldElement {
        self.values[idx]
    }
}

/// A distribution over `r`-tuples of functions.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalStrategy {
    components: Vec<(Ratio<u64>, Vec<FunctionTable>)>,
}

impl ClassicalStrategy {
    /// Every player answers with `f`.
    pub fn symmetric(r: usize, f: FunctionTable) -> Self {
        ClassicalStrategy {
            components: vec![(Ratio::from_integer(1), vec![f; r])],
        }
    }

    /// A deterministic tuple, one function per player.
    pub fn deterministic(tuple: Vec<FunctionTable>) -> Self {
        ClassicalStrategy {
            components: vec![(Ratio::from_integer(1), tuple)],
        }
    }

    pub fn mixture(components: Vec<(Ratio<u64>, Vec<FunctionTable>)>) -> Result<Self, GameError> {
        let total: Ratio<u64> = components.iter().map(|(w, _)| *w).sum();
        if components.is_empty() || total != Ratio::from_integer(1) || components.iter().any(|(w, _)| *w == Ratio::from_integer(0)) {
            return Err(GameError::BadWeights);
        }
        Ok(ClassicalStrategy { components })
    }

    pub fn components(&self) -> &[(Ratio<u64>, Vec<FunctionTable>)] {
        &self.components
    }

    fn check(&self, config: &MLGameConfig) -> Result<(), GameError> {
        for (_, tuple) in &self.components {
            if tuple.len() != config.r {
                return Err(GameError::TupleSize {
                    expected: config.r,
                    got: tuple.len(),
                });
            }
            for f in tuple {
                if f.n != config.n || f.field != config.field {
                    return Err(GameError::TableSize {
                        expected: config.points(),
                        got: f.values.len(),
                    });
                }
            }
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, (w, _)) in self.components.iter().enumerate() {
            acc += *w.numer() as f64 / *w.denom() as f64;
            if u < acc {
                return i;
            }
        }
        self.components.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GameTest {
    Consistency,
    /// Linearity test along `direction`, with the three points sent to
    /// `players` in order.
    Linearity { direction: usize, players: [usize; 3] },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayRecord {
    pub component: usize,
    pub test: GameTest,
    pub accepted: bool,
}

/// One round of the game.
pub fn play<R: Rng + ?Sized>(
    config: &MLGameConfig,
    strategy: &ClassicalStrategy,
    rng: &mut R,
) -> Result<PlayRecord, GameError> {
    strategy.check(config)?;
    let field = config.field;
    let component = strategy.sample(rng);
    let tuple = &strategy.components[component].1;
    if rng.gen_bool(0.5) {
        let x: Vec<FieldElement> = (0..config.n).map(|_| field.random(rng)).collect();
        let first = tuple[0].at(&x);
        let accepted = tuple.iter().all(|f| f.at(&x) == first);
        return Ok(PlayRecord {
            component,
            test: GameTest::Consistency,
            accepted,
        });
    }
    let i = rng.gen_range(0..config.n);
    let x: Vec<FieldElement> = (0..config.n).map(|_| field.random(rng)).collect();
    let (yi, zi) = two_other_values(&field, x[i], rng);
    let players = if config.r == 3 {
        [0, 1, 2]
    } else {
        let mut all: Vec<usize> = (0..config.r).collect();
        let (chosen, _) = all.partial_shuffle(rng, 3);
        [chosen[0], chosen[1], chosen[2]]
    };
    let mut y = x.clone();
    y[i] = yi;
    let mut z = x.clone();
    z[i] = zi;
    let accepted = collinear(
        (x[i], tuple[players[0]].at(&x)),
        (yi, tuple[players[1]].at(&y)),
        (zi, tuple[players[2]].at(&z)),
    );
    Ok(PlayRecord {
        component,
        test: GameTest::Linearity { direction: i, players },
        accepted,
    })
}

/// Exact consistency-test and linearity-test acceptance of a deterministic tuple.
pub fn test_values_exact(
    config: &MLGameConfig,
    tuple: &[FunctionTable],
) -> Result<(Ratio<u128>, Ratio<u128>), GameError> {
    ClassicalStrategy::deterministic(tuple.to_vec()).check(config)?;
    let p = config.field.size() as u128;
    let work = config.points() as u128 * config.n as u128 * p * p;
    if work > MAX_EXACT_WORK {
        return Err(GameError::TooLarge(work));
    }
    let field = config.field;
    let cons = (0..config.points())
        .filter(|&idx| tuple.iter().all(|f| f.at_index(idx) == tuple[0].at_index(idx)))
        .count() as u128;
    let triples = config.triples();
    let mut lin = 0u128;
    // Position of coordinate i in the point index is a stride of p^i.
    for i in 0..config.n {
        let stride = (p as usize).pow(i as u32);
        for idx in 0..config.points() {
            let xi_bits = (idx / stride) % p as usize;
            let base = idx - xi_bits * stride;
            let xi = field.element_reduced(xi_bits as u64);
            for yb in 0..p as usize {
                for zb in 0..p as usize {
                    if yb == xi_bits || zb == xi_bits || yb == zb {
                        continue;
                    }
                    let (yi, zi) = (field.element_reduced(yb as u64), field.element_reduced(zb as u64));
                    for t in &triples {
                        let a = tuple[t[0]].at_index(idx);
                        let b = tuple[t[1]].at_index(base + yb * stride);
                        let c = tuple[t[2]].at_index(base + zb * stride);
                        if collinear((xi, a), (yi, b), (zi, c)) {
                            lin += 1;
                        }
                    }
                }
            }
        }
    }
    let lin_total = triples.len() as u128 * config.n as u128 * config.points() as u128 * (p - 1) * (p - 2);
    Ok((
        Ratio::new(cons, config.points() as u128),
        Ratio::new(lin, lin_total),
    ))
}

/// Exact acceptance probability of a strategy: the weighted average over its
/// components of `(consistency + linearity)/2`.
pub fn acceptance_exact(config: &MLGameConfig, strategy: &ClassicalStrategy) -> Result<Ratio<u128>, GameError> {
    strategy.check(config)?;
    let mut total = Ratio::from_integer(0u128);
    for (w, tuple) in &strategy.components {
        let (cons, lin) = test_values_exact(config, tuple)?;
        let w = Ratio::new(*w.numer() as u128, *w.denom() as u128);
        total += w * (cons + lin) / 2;
    }
    Ok(total)
}

/// Monte-Carlo acceptance over `trials` seeded plays.
pub fn acceptance_monte_carlo(
    config: &MLGameConfig,
    strategy: &ClassicalStrategy,
    trials: u64,
    seed: u64,
) -> Result<u64, GameError> {
    let mut rng = rng_from_seed(seed);
    let mut accepts = 0;
    for _ in 0..trials {
        accepts += play(config, strategy, &mut rng)?.accepted as u64;
    }
    Ok(accepts)
}

// ---------------------------------------------------------------------------
// Descriptors
// ---------------------------------------------------------------------------

/// Structured-text strategy description:
///
/// ```text
/// multilinear <v0,v1,...>          boolean-cube table of length 2^n (hex or decimal)
/// perturbed <v0,v1,...> <rate>     the same, with a fraction of all p^n values resampled
/// function-table <file>            p^n whitespace-separated values in point order
/// mixture [<w>: <desc>; <w>: <desc>]
/// tuple [<desc>; <desc>; ...]      one description per player
/// ```
#[derive(Clone, Debug, PartialEq)]
pub enum Descriptor {
    Multilinear(Vec<u64>),
    Perturbed(Vec<u64>, f64),
    FunctionTable(String),
    Mixture(Vec<(Ratio<u64>, Descriptor)>),
    Tuple(Vec<Descriptor>),
}

fn parse_value(word: &str) -> Result<u64, GameError> {
    let w = word.trim();
    let parsed = match w.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => w.parse(),
    };
    parsed.map_err(|_| GameError::Descriptor(format!("bad value `{w}`")))
}

fn parse_list(text: &str) -> Result<Vec<u64>, GameError> {
    text.split(',').filter(|s| !s.trim().is_empty()).map(parse_value).collect()
}

/// Splits on `sep` at bracket depth zero.
fn split_top(text: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

fn bracketed(rest: &str) -> Result<&str, GameError> {
    rest.trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| GameError::Descriptor("expected `[...]`".into()))
}

impl Descriptor {
    pub fn parse(text: &str) -> Result<Self, GameError> {
        let text = text.trim();
        let (head, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        match head {
            "multilinear" => Ok(Descriptor::Multilinear(parse_list(rest)?)),
            "perturbed" => {
                let (table, rate) = rest
                    .trim()
                    .rsplit_once(char::is_whitespace)
                    .ok_or_else(|| GameError::Descriptor("perturbed needs a table and a rate".into()))?;
                let rate: f64 = rate
                    .parse()
                    .map_err(|_| GameError::Descriptor(format!("bad rate `{rate}`")))?;
                if !(0.0..=1.0).contains(&rate) {
                    return Err(GameError::Descriptor(format!("rate {rate} outside [0, 1]")));
                }
                Ok(Descriptor::Perturbed(parse_list(table)?, rate))
            }
            "function-table" => {
                let path = rest.trim();
                if path.is_empty() {
                    return Err(GameError::Descriptor("function-table needs a file".into()));
                }
                Ok(Descriptor::FunctionTable(path.to_string()))
            }
            "mixture" => {
                let parts = split_top(bracketed(rest)?, ';');
                let mut comps = Vec::new();
                for part in parts.iter().filter(|p| !p.trim().is_empty()) {
                    let (w, d) = part
                        .split_once(':')
                        .ok_or_else(|| GameError::Descriptor("mixture entries are `<w>: <desc>`".into()))?;
                    let w = w.trim();
                    let weight = match w.split_once('/') {
                        Some((a, b)) => {
                            let (a, b) = (parse_value(a)?, parse_value(b)?);
                            if b == 0 {
                                return Err(GameError::BadWeights);
                            }
                            Ratio::new(a, b)
                        }
                        None => Ratio::from_integer(parse_value(w)?),
                    };
                    comps.push((weight, Descriptor::parse(d)?));
                }
                Ok(Descriptor::Mixture(comps))
            }
            "tuple" => {
                let parts = split_top(bracketed(rest)?, ';');
                Ok(Descriptor::Tuple(
                    parts
                        .iter()
                        .filter(|p| !p.trim().is_empty())
                        .map(|p| Descriptor::parse(p))
                        .collect::<Result<_, _>>()?,
                ))
            }
            other => Err(GameError::Descriptor(format!("unknown strategy `{other}`"))),
        }
    }

    /// Builds the strategy. Relative `function-table` paths resolve against `base`.
    pub fn realize(&self, config: &MLGameConfig, seed: u64, base: &Path) -> Result<ClassicalStrategy, GameError> {
        let mut rng = rng_from_seed(seed);
        self.realize_with(config, &mut rng, base)
    }

    fn single<R: Rng>(&self, config: &MLGameConfig, rng: &mut R, base: &Path) -> Result<Option<FunctionTable>, GameError> {
        let field = config.field;
        let ml = |vals: &[u64]| -> Result<FunctionTable, GameError> {
            let table: Vec<FieldElement> = vals
                .iter()
                .map(|&v| field.element(v).map_err(|e| GameError::Descriptor(e.to_string())))
                .collect::<Result<_, _>>()?;
            if table.len() != 1 << config.n {
                return Err(GameError::TableSize {
                    expected: 1 << config.n,
                    got: table.len(),
                });
            }
            Ok(FunctionTable::from_multilinear(field, &MultilinearFn::extend(table)?))
        };
        Ok(Some(match self {
            Descriptor::Multilinear(vals) => ml(vals)?,
            Descriptor::Perturbed(vals, rate) => ml(vals)?.perturbed(*rate, rng),
            Descriptor::FunctionTable(path) => {
                let text = std::fs::read_to_string(base.join(path))?;
                let values = text
                    .split_whitespace()
                    .map(|w| {
                        parse_value(w).and_then(|v| field.element(v).map_err(|e| GameError::Descriptor(e.to_string())))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                FunctionTable::new(field, config.n, values)?
            }
            _ => return Ok(None),
        }))
    }

    fn realize_with<R: Rng>(&self, config: &MLGameConfig, rng: &mut R, base: &Path) -> Result<ClassicalStrategy, GameError> {
        if let Some(f) = self.single(config, rng, base)? {
            return Ok(ClassicalStrategy::symmetric(config.r, f));
        }
        match self {
            Descriptor::Tuple(parts) => {
                if parts.len() != config.r {
                    return Err(GameError::TupleSize {
                        expected: config.r,
                        got: parts.len(),
                    });
                }
                let tuple = parts
                    .iter()
                    .map(|p| {
                        p.single(config, rng, base)?
                            .ok_or_else(|| GameError::Descriptor("tuple entries must be single functions".into()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ClassicalStrategy::deterministic(tuple))
            }
            Descriptor::Mixture(parts) => {
                let mut comps = Vec::new();
                for (w, d) in parts {
                    let inner = d.realize_with(config, rng, base)?;
                    for (w2, tuple) in inner.components {
                        comps.push((*w * w2, tuple));
                    }
                }
                ClassicalStrategy::mixture(comps)
            }
            _ => unreachable!("single-function descriptors handled above"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn gf4_config(r: usize, n: usize) -> MLGameConfig {
        MLGameConfig::new(r, n, FieldSpec::gf4()).unwrap()
    }

    fn ml_from_code(field: FieldSpec, n: usize, code: u64) -> FunctionTable {
        let table = (0..1usize << n).map(|i| field.element_reduced(code >> (2 * i) & 3)).collect();
        FunctionTable::from_multilinear(field, &MultilinearFn::extend(table).unwrap())
    }

    #[test]
    fn multilinear_strategies_always_win() {
        for n in 1..=2 {
            let config = gf4_config(3, n);
            for code in 0..4u64.pow(1 << n) {
                let s = ClassicalStrategy::symmetric(3, ml_from_code(config.field, n, code));
                assert_eq!(acceptance_exact(&config, &s).unwrap(), Ratio::from_integer(1));
            }
        }
    }

    #[test]
    fn distinct_multilinear_consistency_is_their_agreement() {
        let config = gf4_config(3, 2);
        let f = config.field;
        for (c1, c2) in [(0x1b, 0x2c), (0x00, 0x01), (0xff, 0x0f)] {
            let g = ml_from_code(f, 2, c1);
            let h = ml_from_code(f, 2, c2);
            let agree = (0..config.points()).filter(|&i| g.at_index(i) == h.at_index(i)).count();
            let (cons, _) = test_values_exact(&config, &[g.clone(), h, g]).unwrap();
            assert_eq!(cons, Ratio::new(agree as u128, 16));
            assert!(cons <= Ratio::new(2, 4));
        }
    }

    #[test]
    fn strictly_quadratic_functions_never_pass_linearity() {
        // Slopes of a·t² + b·t + c through (x, y) equal a(x + y) + b, so two
        // slopes on distinct x, z can only agree when a = 0.
        let config = gf4_config(3, 1);
        let f = config.field;
        for a in 1..4 {
            for b in 0..4 {
                let (a, b) = (f.element_reduced(a), f.element_reduced(b));
                let q = FunctionTable::from_fn(f, 1, |x| a * x[0] * x[0] + b * x[0]);
                let (cons, lin) = test_values_exact(&config, &vec![q.clone(); 3]).unwrap();
                assert_eq!(cons, Ratio::from_integer(1));
                assert_eq!(lin, Ratio::from_integer(0));
            }
        }
    }

    #[test]
    fn distinct_constants_score_half_linearity() {
        let config = gf4_config(3, 1);
        let f = config.field;
        let tuple: Vec<_> = (1..=3)
            .map(|c| FunctionTable::from_fn(f, 1, move |_| f.element_reduced(c)))
            .collect();
        let (cons, lin) = test_values_exact(&config, &tuple).unwrap();
        assert_eq!(cons, Ratio::from_integer(0));
        let value = acceptance_exact(&config, &ClassicalStrategy::deterministic(tuple)).unwrap();
        assert_eq!(value, lin / 2);
    }

    #[test]
    fn mixtures_are_convex_combinations() {
        let config = gf4_config(4, 1);
        let f = config.field;
        let mut rng = rng_from_seed(2);
        let a = vec![FunctionTable::random(f, 1, &mut rng); 4];
        let b: Vec<_> = (0..4).map(|_| FunctionTable::random(f, 1, &mut rng)).collect();
        let va = acceptance_exact(&config, &ClassicalStrategy::deterministic(a.clone())).unwrap();
        let vb = acceptance_exact(&config, &ClassicalStrategy::deterministic(b.clone())).unwrap();
        let mix = ClassicalStrategy::mixture(vec![(Ratio::new(1, 3), a), (Ratio::new(2, 3), b)]).unwrap();
        let vm = acceptance_exact(&config, &mix).unwrap();
        assert_eq!(vm, va * Ratio::new(1, 3) + vb * Ratio::new(2, 3));
    }

    #[test]
    fn monte_carlo_agrees_with_exact_value() {
        for r in [3, 5] {
            let config = gf4_config(r, 1);
            let mut rng = rng_from_seed(8);
            let tuple: Vec<_> = (0..r).map(|_| FunctionTable::random(config.field, 1, &mut rng)).collect();
            let s = ClassicalStrategy::deterministic(tuple);
            let exact = acceptance_exact(&config, &s).unwrap();
            let exact = *exact.numer() as f64 / *exact.denom() as f64;
            let trials = 40_000;
            let hits = acceptance_monte_carlo(&config, &s, trials, 1).unwrap();
            let rate = hits as f64 / trials as f64;
            let half = crate::stats::hoeffding_half_width(trials, 1e-4);
            assert!((rate - exact).abs() <= half, "r={r}: {rate} vs {exact}");
        }
    }

    #[test]
    fn referee_marginals_are_uniform() {
        let config = gf4_config(3, 1);
        let mut rng = rng_from_seed(21);
        let mut counts = [[0u64; 4]; 3];
        for _ in 0..40_000 {
            let x = config.field.random(&mut rng);
            let (y, z) = two_other_values(&config.field, x, &mut rng);
            for (p, v) in [x, y, z].iter().enumerate() {
                counts[p][v.bits() as usize] += 1;
            }
        }
        let crit = crate::stats::chi_square_critical(3, 0.001);
        for c in counts {
            assert!(crate::stats::chi_square_uniform(&c) < crit);
        }
    }

    #[test]
    fn descriptors() {
        let config = gf4_config(3, 1);
        let base = Path::new(".");
        let d = Descriptor::parse("multilinear 0x1,2").unwrap();
        assert_eq!(d, Descriptor::Multilinear(vec![1, 2]));
        let s = d.realize(&config, 0, base).unwrap();
        assert_eq!(acceptance_exact(&config, &s).unwrap(), Ratio::from_integer(1));

        let m = Descriptor::parse("mixture [1/2: multilinear 0,1; 1/2: perturbed 0,1 0.5]").unwrap();
        let s = m.realize(&config, 3, base).unwrap();
        assert_eq!(s.components().len(), 2);

        let t = Descriptor::parse("tuple [multilinear 0,1; multilinear 0,1; multilinear 1,1]").unwrap();
        let s = t.realize(&config, 0, base).unwrap();
        let (cons, _) = test_values_exact(&config, &s.components()[0].1).unwrap();
        assert_eq!(cons, Ratio::new(1, 4));

        assert!(Descriptor::parse("quadratic 1,2").is_err());
        assert!(Descriptor::parse("perturbed 0,1 2.0").is_err());
        assert!(Descriptor::parse("multilinear 0,1,2").unwrap().realize(&config, 0, base).is_err());
    }

    #[test]
    fn config_and_size_guards() {
        assert!(MLGameConfig::new(2, 1, FieldSpec::gf4()).is_err());
        assert!(MLGameConfig::new(3, 1, FieldSpec::binary(1).unwrap()).is_err());
        let big = MLGameConfig::new(3, 3, FieldSpec::gf64()).unwrap();
        let g = ClassicalStrategy::symmetric(3, FunctionTable::from_fn(big.field, 3, |x| x[0]));
        assert!(matches!(acceptance_exact(&big, &g), Err(GameError::TooLarge(_))));
    }
}
