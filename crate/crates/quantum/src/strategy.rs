//! Entangled strategies for the multilinearity game.

use std::fmt::Write as _;
use std::sync::Arc;

use mipstar::mlgame::{ClassicalStrategy, MLGameConfig};
use mipstar::rng::{derive_seed, rng_from_seed};
use mipstar::FieldSpec;
use num_complex::Complex64;
use rand::Rng;

use crate::error::QuantumError;
use crate::linalg::{self, c, CMatrix, IDENTITY_TOL};
use crate::state::StateVector;

/// `A[x][a]`: one POVM per point of `F^n` (in point order), outcomes indexed
/// by the bit pattern of `a ∈ F`.
pub type PointMeasurements = Vec<Vec<CMatrix>>;

/// A shared state plus one family of point measurements per player.
#[derive(Clone, Debug)]
pub struct QuantumStrategy {
    config: MLGameConfig,
    state: StateVector,
    families: Vec<Arc<PointMeasurements>>,
    projective: bool,
    permutation_invariant: bool,
}

fn validate_family(config: &MLGameConfig, d: usize, family: &PointMeasurements) -> Result<bool, QuantumError> {
    let p = config.field.size() as usize;
    if family.len() != config.points() {
        return Err(QuantumError::DimensionMismatch {
            expected: config.points(),
            got: family.len(),
        });
    }
    let mut projective = true;
    for (point, povm) in family.iter().enumerate() {
        if povm.len() != p {
            return Err(QuantumError::NotMeasurement {
                point,
                msg: format!("{} outcomes, expected {p}", povm.len()),
            });
        }
        for (a, m) in povm.iter().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(QuantumError::DimensionMismatch { expected: d, got: m.nrows() });
            }
            if !linalg::is_psd(m, IDENTITY_TOL) {
                return Err(QuantumError::NotMeasurement {
                    point,
                    msg: format!("outcome {a} is not positive semidefinite"),
                });
            }
            projective &= linalg::is_projector(m, IDENTITY_TOL);
        }
        let defect = (linalg::sum(povm, d) - linalg::identity(d)).camax();
        if defect > IDENTITY_TOL {
            return Err(QuantumError::NotMeasurement {
                point,
                msg: format!("outcomes sum to identity only up to {defect:.3e}"),
            });
        }
    }
    Ok(projective)
}

impl QuantumStrategy {
    /// `families` holds either one family shared by every player or one per
    /// player. The projective and permutation-invariance flags are computed.
    pub fn new(config: MLGameConfig, state: StateVector, families: Vec<PointMeasurements>) -> Result<Self, QuantumError> {
        if state.registers() != config.r {
            return Err(QuantumError::DimensionMismatch {
                expected: config.r,
                got: state.registers(),
            });
        }
        let families: Vec<Arc<PointMeasurements>> = match families.len() {
            1 => vec![Arc::new(families.into_iter().next().expect("one family")); config.r],
            len if len == config.r => families.into_iter().map(Arc::new).collect(),
            len => {
                return Err(QuantumError::DimensionMismatch {
                    expected: config.r,
                    got: len,
                })
            }
        };
        let d = state.local_dim();
        let mut projective = true;
        for (j, family) in families.iter().enumerate() {
            if j > 0 && Arc::ptr_eq(family, &families[j - 1]) {
                continue;
            }
            projective &= validate_family(&config, d, family)?;
        }
        let same_families = families.windows(2).all(|w| Arc::ptr_eq(&w[0], &w[1]) || w[0] == w[1]);
        let permutation_invariant = same_families && state.is_permutation_invariant(IDENTITY_TOL);
        Ok(QuantumStrategy {
            config,
            state,
            families,
            projective,
            permutation_invariant,
        })
    }

    pub fn config(&self) -> &MLGameConfig {
        &self.config
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn local_dim(&self) -> usize {
        self.state.local_dim()
    }

    pub fn family(&self, player: usize) -> &PointMeasurements {
        &self.families[player]
    }

    /// `A_x^a` of `player`.
    pub fn op(&self, player: usize, point: usize, a: usize) -> &CMatrix {
        &self.families[player][point][a]
    }

    pub fn is_projective(&self) -> bool {
        self.projective
    }

    pub fn is_permutation_invariant(&self) -> bool {
        self.permutation_invariant
    }

    /// Conjugates every `A_x^a` by `exp(iθH_x)` with a random Hermitian `H_x`
    /// (one per point, the same for all players, drawn from `seed`).
    pub fn rotated(&self, theta: f64, seed: u64) -> Result<Self, QuantumError> {
        let d = self.local_dim();
        let unitaries: Vec<CMatrix> = (0..self.config.points())
            .map(|x| {
                let mut rng = rng_from_seed(derive_seed(seed, x as u64));
                let g = linalg::ginibre(d, d, &mut rng);
                unitary_exp(&linalg::hermitian_part(&g), theta)
            })
            .collect();
        let families = self
            .distinct_families()
            .into_iter()
            .map(|family| {
                family
                    .iter()
                    .zip(&unitaries)
                    .map(|(povm, u)| povm.iter().map(|m| linalg::hermitian_part(&(u * m * u.adjoint()))).collect())
                    .collect()
            })
            .collect();
        QuantumStrategy::new(self.config, self.state.clone(), families)
    }

    /// One family if all players share it, otherwise one per player.
    fn distinct_families(&self) -> Vec<PointMeasurements> {
        if self.families.windows(2).all(|w| Arc::ptr_eq(&w[0], &w[1])) {
            vec![(*self.families[0]).clone()]
        } else {
            self.families.iter().map(|f| (**f).clone()).collect()
        }
    }

    /// Writes the strategy in the text layout read by [`QuantumStrategy::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let field = serde_json::to_string(&self.config.field).expect("field serializes");
        let _ = writeln!(out, "mipstar-strategy 1");
        let _ = writeln!(out, "field {field}");
        let _ = writeln!(out, "n {}", self.config.n);
        let _ = writeln!(out, "r {}", self.config.r);
        let _ = writeln!(out, "d {}", self.local_dim());
        let _ = writeln!(out, "state");
        for a in self.state.amplitudes().iter() {
            let _ = writeln!(out, "{}", fmt_complex(*a));
        }
        let families = self.distinct_families();
        for (j, family) in families.iter().enumerate() {
            if families.len() == 1 {
                let _ = writeln!(out, "family all");
            } else {
                let _ = writeln!(out, "family {j}");
            }
            for (x, povm) in family.iter().enumerate() {
                for (a, m) in povm.iter().enumerate() {
                    if m.iter().all(|e| *e == c(0.0)) {
                        continue;
                    }
                    let _ = writeln!(out, "op {x} {a}");
                    for row in 0..m.nrows() {
                        let line: Vec<String> = (0..m.ncols()).map(|col| fmt_complex(m[(row, col)])).collect();
                        let _ = writeln!(out, "{}", line.join(" "));
                    }
                }
            }
        }
        out
    }

    /// Reads the text layout:
    ///
    /// ```text
    /// mipstar-strategy 1
    /// field {"k":2,"modulus_hex":"0x7","provenance":"tower"}
    /// n <variables>
    /// r <players>
    /// d <local dimension>
    /// state
    /// <d^r lines `re,im`, register 0 most significant>
    /// family all | family <player>
    /// op <point index> <outcome bits>
    /// <d rows of d whitespace-separated `re,im` entries>
    /// ```
    ///
    /// Operators that are not listed are zero. Lines starting with `#` are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self, QuantumError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .peekable();
        let err = |line: usize, msg: &str| QuantumError::Parse { line, msg: msg.to_string() };
        let mut header = |key: &str| -> Result<(usize, String), QuantumError> {
            let (line, l) = lines.next().ok_or_else(|| err(0, &format!("missing `{key}`")))?;
            let rest = l
                .strip_prefix(key)
                .ok_or_else(|| err(line, &format!("expected `{key}`")))?;
            Ok((line, rest.trim().to_string()))
        };
        let (line, version) = header("mipstar-strategy")?;
        if version != "1" {
            return Err(err(line, "unsupported version"));
        }
        let (line, field) = header("field")?;
        let field: FieldSpec = serde_json::from_str(&field).map_err(|e| err(line, &e.to_string()))?;
        let mut number = |key: &str| -> Result<usize, QuantumError> {
            let (line, v) = header(key)?;
            v.parse().map_err(|_| err(line, &format!("bad `{key}`")))
        };
        let n = number("n")?;
        let r = number("r")?;
        let d = number("d")?;
        let (line, rest) = header("state")?;
        if !rest.is_empty() {
            return Err(err(line, "unexpected text after `state`"));
        }
        let config = MLGameConfig::new(r, n, field)?;
        let dim = d.checked_pow(r as u32).ok_or(QuantumError::TooLarge(usize::MAX))?;
        if dim > crate::state::MAX_JOINT_DIM {
            return Err(QuantumError::TooLarge(dim));
        }
        let mut amps = Vec::with_capacity(dim);
        for _ in 0..dim {
            let (line, l) = lines.next().ok_or_else(|| err(0, "state ends early"))?;
            amps.push(parse_complex(l).ok_or_else(|| err(line, "bad amplitude"))?);
        }
        let state = StateVector::new(d, r, amps)?;
        let p = field.size() as usize;
        let empty = || vec![vec![linalg::zeros(d, d); p]; config.points()];
        let mut shared: Option<PointMeasurements> = None;
        let mut per_player: Vec<Option<PointMeasurements>> = vec![None; r];
        let mut current: Option<(bool, usize)> = None;
        while let Some((line, l)) = lines.next() {
            if let Some(rest) = l.strip_prefix("family") {
                let rest = rest.trim();
                if rest == "all" {
                    shared = Some(empty());
                    current = Some((true, 0));
                } else {
                    let j: usize = rest.parse().map_err(|_| err(line, "bad player"))?;
                    if j >= r {
                        return Err(err(line, "player out of range"));
                    }
                    per_player[j] = Some(empty());
                    current = Some((false, j));
                }
                continue;
            }
            let rest = l.strip_prefix("op").ok_or_else(|| err(line, "expected `op` or `family`"))?;
            let mut words = rest.split_whitespace();
            let x: usize = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| err(line, "bad point"))?;
            let a: usize = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| err(line, "bad outcome"))?;
            if x >= config.points() || a >= p {
                return Err(err(line, "point or outcome out of range"));
            }
            let mut m = linalg::zeros(d, d);
            for row in 0..d {
                let (line, l) = lines.next().ok_or_else(|| err(line, "matrix ends early"))?;
                let entries: Vec<&str> = l.split_whitespace().collect();
                if entries.len() != d {
                    return Err(err(line, "wrong number of entries"));
                }
                for (col, e) in entries.iter().enumerate() {
                    m[(row, col)] = parse_complex(e).ok_or_else(|| err(line, "bad entry"))?;
                }
            }
            let target = match current {
                Some((true, _)) => shared.as_mut(),
                Some((false, j)) => per_player[j].as_mut(),
                None => None,
            }
            .ok_or_else(|| err(line, "`op` before `family`"))?;
            target[x][a] = m;
        }
        let families = match shared {
            Some(f) => vec![f],
            None => per_player
                .into_iter()
                .enumerate()
                .map(|(j, f)| f.ok_or_else(|| err(0, &format!("missing family for player {j}"))))
                .collect::<Result<_, _>>()?,
        };
        QuantumStrategy::new(config, state, families)
    }
}

fn fmt_complex(z: Complex64) -> String {
    format!("{:e},{:e}", z.re, z.im)
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let (re, im) = s.split_once(',')?;
    Some(Complex64::new(re.trim().parse().ok()?, im.trim().parse().ok()?))
}

/// `exp(iθH)` for Hermitian `H`.
pub fn unitary_exp(h: &CMatrix, theta: f64) -> CMatrix {
    let (values, vectors) = linalg::eigh(h);
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |row, col| {
        vectors[(row, col)] * Complex64::from_polar(1.0, theta * values[col])
    });
    &scaled * vectors.adjoint()
}

/// Diagonal embedding of a classical strategy: the state
/// `Σ_c √w_c |c⟩^{⊗r}` over mixture components and, for player `j`,
/// `A_x^a = Σ_c [f_{c,j}(x) = a] |c⟩⟨c|`.
pub fn embed_classical(config: &MLGameConfig, strategy: &ClassicalStrategy) -> Result<QuantumStrategy, QuantumError> {
    let components = strategy.components();
    let weights: Vec<f64> = components
        .iter()
        .map(|(w, _)| *w.numer() as f64 / *w.denom() as f64)
        .collect();
    let d = components.len();
    let state = StateVector::maximally_correlated(&weights, config.r)?;
    for (_, tuple) in components {
        if tuple.len() != config.r {
            return Err(QuantumError::DimensionMismatch {
                expected: config.r,
                got: tuple.len(),
            });
        }
        if tuple.iter().any(|f| f.n() != config.n || f.field() != config.field) {
            return Err(QuantumError::Arity("function table does not match the game".into()));
        }
    }
    let symmetric = components.iter().all(|(_, t)| t.windows(2).all(|w| w[0] == w[1]));
    let players = if symmetric { 1 } else { config.r };
    let p = config.field.size() as usize;
    let families = (0..players)
        .map(|j| {
            (0..config.points())
                .map(|x| {
                    let mut povm = vec![linalg::zeros(d, d); p];
                    for (s, (_, tuple)) in components.iter().enumerate() {
                        let a = tuple[j].at_index(x).bits() as usize;
                        povm[a][(s, s)] = c(1.0);
                    }
                    povm
                })
                .collect()
        })
        .collect();
    QuantumStrategy::new(*config, state, families)
}

/// Random symmetric projective strategy: a permutation-symmetrized Gaussian
/// state and one random projective measurement per point shared by all players.
pub fn random_projective_strategy<R: Rng + ?Sized>(
    config: &MLGameConfig,
    d: usize,
    rng: &mut R,
) -> Result<QuantumStrategy, QuantumError> {
    let p = config.field.size() as usize;
    let state = random_symmetric_state(d, config.r, rng)?;
    let family = (0..config.points()).map(|_| linalg::random_projective(d, p, rng)).collect();
    QuantumStrategy::new(*config, state, vec![family])
}

/// Gaussian vector averaged over all register permutations, normalized.
pub fn random_symmetric_state<R: Rng + ?Sized>(d: usize, r: usize, rng: &mut R) -> Result<StateVector, QuantumError> {
    let dim = d.checked_pow(r as u32).ok_or(QuantumError::TooLarge(usize::MAX))?;
    let g = linalg::ginibre(dim, 1, rng);
    let raw = StateVector::normalized(d, r, g.iter().copied().collect())?;
    let mut acc = nalgebra::DVector::<Complex64>::zeros(dim);
    for perm in permutations(r) {
        acc += raw.permuted(&perm)?.amplitudes();
    }
    StateVector::normalized(d, r, acc.iter().copied().collect())
}

/// All permutations of `0..r` in lexicographic order.
pub fn permutations(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..r {
        for rest in permutations(r - 1) {
            let mut perm = vec![first];
            perm.extend(rest.into_iter().map(|v| if v >= first { v + 1 } else { v }));
            out.push(perm);
        }
    }
    out
}

/// Symmetrization by a shared permutation label: prover `i` receives
/// `|σ(i)⟩` together with register `σ(i)` of the original state and plays as
/// the original player `σ(i)`. The local dimension becomes `r·d`.
pub fn symmetrize(strategy: &QuantumStrategy) -> Result<QuantumStrategy, QuantumError> {
    let config = *strategy.config();
    let r = config.r;
    let d = strategy.local_dim();
    let nd = r * d;
    let dim = nd.checked_pow(r as u32).ok_or(QuantumError::TooLarge(usize::MAX))?;
    if dim > crate::state::MAX_JOINT_DIM {
        return Err(QuantumError::TooLarge(dim));
    }
    let perms = permutations(r);
    let norm = 1.0 / (perms.len() as f64).sqrt();
    let mut amps = vec![c(0.0); dim];
    let old = strategy.state().amplitudes();
    for sigma in &perms {
        for old_idx in 0..old.len() {
            let amp = old[old_idx];
            if amp == c(0.0) {
                continue;
            }
            // Digit of original register j.
            let mut digits = vec![0usize; r];
            let mut t = old_idx;
            for slot in digits.iter_mut().rev() {
                *slot = t % d;
                t /= d;
            }
            let new_idx = (0..r).fold(0, |acc, i| acc * nd + sigma[i] * d + digits[sigma[i]]);
            amps[new_idx] += amp * norm;
        }
    }
    let state = StateVector::new(nd, r, amps)?;
    let p = config.field.size() as usize;
    let family = (0..config.points())
        .map(|x| {
            (0..p)
                .map(|a| {
                    let mut m = linalg::zeros(nd, nd);
                    for j in 0..r {
                        m.view_mut((j * d, j * d), (d, d)).copy_from(strategy.op(j, x, a));
                    }
                    m
                })
                .collect()
        })
        .collect();
    QuantumStrategy::new(config, state, vec![family])
}

#[cfg(test)]
mod tests {
    use super::*;
    use mipstar::mlgame::FunctionTable;
    use mipstar::FieldSpec;

    fn config() -> MLGameConfig {
        MLGameConfig::new(3, 1, FieldSpec::gf4()).unwrap()
    }

    #[test]
    fn embedding_of_symmetric_strategy_is_invariant_and_projective() {
        let cfg = config();
        let mut rng = rng_from_seed(1);
        let f = FunctionTable::random(cfg.field, 1, &mut rng);
        let q = embed_classical(&cfg, &ClassicalStrategy::symmetric(3, f)).unwrap();
        assert!(q.is_projective());
        assert!(q.is_permutation_invariant());
        assert_eq!(q.local_dim(), 1);
    }

    #[test]
    fn text_layout_round_trips() {
        let cfg = config();
        let mut rng = rng_from_seed(2);
        let q = random_projective_strategy(&cfg, 2, &mut rng).unwrap();
        let back = QuantumStrategy::parse(&q.to_text()).unwrap();
        assert_eq!(back.to_text(), q.to_text());
        assert!(back.is_permutation_invariant());
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = QuantumStrategy::parse("mipstar-strategy 1\nfield nope\n").unwrap_err();
        assert!(matches!(err, QuantumError::Parse { line: 2, .. }));
    }

    #[test]
    fn symmetrized_state_is_invariant() {
        let cfg = config();
        let mut rng = rng_from_seed(3);
        let tuple: Vec<FunctionTable> = (0..3).map(|_| FunctionTable::random(cfg.field, 1, &mut rng)).collect();
        let q = embed_classical(&cfg, &ClassicalStrategy::deterministic(tuple)).unwrap();
        assert!(!q.is_permutation_invariant());
        let s = symmetrize(&q).unwrap();
        assert!(s.is_permutation_invariant());
        assert_eq!(s.local_dim(), 3);
    }

    #[test]
    fn rotation_keeps_measurements_valid() {
        let cfg = config();
        let mut rng = rng_from_seed(4);
        let q = random_projective_strategy(&cfg, 2, &mut rng).unwrap();
        let rot = q.rotated(0.3, 7).unwrap();
        assert!(rot.is_projective());
    }

    #[test]
    fn non_measurement_is_rejected() {
        let cfg = config();
        let state = StateVector::product(&[c(1.0)], 3).unwrap();
        let family = vec![vec![linalg::zeros(1, 1); 4]; 4];
        assert!(matches!(
            QuantumStrategy::new(cfg, state, vec![family]),
            Err(QuantumError::NotMeasurement { .. })
        ));
    }

    #[test]
    fn permutations_are_complete() {
        let perms = permutations(3);
        assert_eq!(perms.len(), 6);
        let mut sorted = perms.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), 6);
    }
}
