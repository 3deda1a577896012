//! Families of sub-measurements with multilinear outcomes, and the
//! consistency / inconsistency of two such families on a shared state.
//!
//! Coordinates are 0-based. A family of arity `k` has outcomes
//! `g ∈ ML(F^k, F)` (functions of coordinates `0..k`) and is indexed by the
//! remaining coordinates `x_k, …, x_{n-1}`. Outcomes are encoded by their
//! boolean-cube tables read as base-`p` numbers (entry `b` has weight `p^b`),
//! so for arity 0 the code of a constant is its bit pattern.

use mipstar::{FieldElement, FieldSpec, MultilinearFn};

use crate::error::QuantumError;
use crate::linalg::{self, CMatrix, IDENTITY_TOL};
use crate::state::{trace_pair_unchecked, DensityMatrix};
use crate::strategy::QuantumStrategy;

/// Largest number of stored operators.
pub const MAX_OPERATORS: usize = 1 << 18;

/// Number of outcomes `|ML(F^k, F)| = p^(2^k)`, if it fits the guard.
pub fn outcome_count(field: &FieldSpec, k: usize) -> Result<usize, QuantumError> {
    let p = field.size() as usize;
    if k >= 6 {
        return Err(QuantumError::TooLarge(usize::MAX));
    }
    p.checked_pow(1 << k)
        .filter(|&c| c <= MAX_OPERATORS)
        .ok_or(QuantumError::TooLarge(usize::MAX))
}

/// Code of a multilinear function.
pub fn ml_code(field: &FieldSpec, g: &MultilinearFn) -> usize {
    let p = field.size() as usize;
    g.table().iter().rev().fold(0, |acc, v| acc * p + v.bits() as usize)
}

/// Multilinear function of arity `k` with the given code.
pub fn ml_from_code(field: &FieldSpec, k: usize, mut code: usize) -> MultilinearFn {
    let p = field.size() as usize;
    let table = (0..1usize << k)
        .map(|_| {
            let v = field.element_reduced((code % p) as u64);
            code /= p;
            v
        })
        .collect();
    MultilinearFn::extend(table).expect("power-of-two table")
}

/// `restrict[v][g]`: code of `g` (arity `l`) with coordinates `k..l` fixed to
/// the point of `F^{l-k}` with index `v`.
pub fn restriction_table(field: &FieldSpec, k: usize, l: usize) -> Result<Vec<Vec<usize>>, QuantumError> {
    let p = field.size() as usize;
    let outcomes = outcome_count(field, l)?;
    let fixes = p.pow((l - k) as u32);
    let gs: Vec<MultilinearFn> = (0..outcomes).map(|code| ml_from_code(field, l, code)).collect();
    Ok(mipstar::poly::points(field, l - k)
        .take(fixes)
        .map(|vals| {
            gs.iter()
                .map(|g| ml_code(field, &g.restrict_top(&vals).expect("arity fits")))
                .collect()
        })
        .collect())
}

/// A family of sub-measurements of arity `k`: `ops[x_{≥k}][g]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubMeasurementFamily {
    field: FieldSpec,
    n: usize,
    k: usize,
    d: usize,
    ops: Vec<Vec<CMatrix>>,
}

impl SubMeasurementFamily {
    /// Validates positivity of every operator and `Σ_g P^g ≤ Id`.
    pub fn new(field: FieldSpec, n: usize, k: usize, d: usize, ops: Vec<Vec<CMatrix>>) -> Result<Self, QuantumError> {
        let family = SubMeasurementFamily::unchecked(field, n, k, d, ops)?;
        for (idx, povm) in family.ops.iter().enumerate() {
            for (g, m) in povm.iter().enumerate() {
                if !linalg::is_psd(m, IDENTITY_TOL) {
                    return Err(QuantumError::NotMeasurement {
                        point: idx,
                        msg: format!("outcome {g} is not positive semidefinite"),
                    });
                }
            }
            let top = linalg::max_eigenvalue(&family.total(idx));
            if top > 1.0 + IDENTITY_TOL {
                return Err(QuantumError::NotMeasurement {
                    point: idx,
                    msg: format!("outcomes sum to an operator of norm {top}"),
                });
            }
        }
        Ok(family)
    }

    /// Checks shapes only.
    pub(crate) fn unchecked(field: FieldSpec, n: usize, k: usize, d: usize, ops: Vec<Vec<CMatrix>>) -> Result<Self, QuantumError> {
        if k > n {
            return Err(QuantumError::Arity(format!("arity {k} exceeds {n} variables")));
        }
        let p = field.size() as usize;
        let indices = p.pow((n - k) as u32);
        let outcomes = outcome_count(&field, k)?;
        if indices.saturating_mul(outcomes) > MAX_OPERATORS {
            return Err(QuantumError::TooLarge(indices.saturating_mul(outcomes)));
        }
        if ops.len() != indices {
            return Err(QuantumError::DimensionMismatch {
                expected: indices,
                got: ops.len(),
            });
        }
        for povm in &ops {
            if povm.len() != outcomes {
                return Err(QuantumError::DimensionMismatch {
                    expected: outcomes,
                    got: povm.len(),
                });
            }
            if let Some(m) = povm.iter().find(|m| m.nrows() != d || m.ncols() != d) {
                return Err(QuantumError::DimensionMismatch { expected: d, got: m.nrows() });
            }
        }
        Ok(SubMeasurementFamily { field, n, k, d, ops })
    }

    /// The point measurements of `player` as a family of arity 0.
    pub fn from_strategy(strategy: &QuantumStrategy, player: usize) -> Result<Self, QuantumError> {
        let config = strategy.config();
        SubMeasurementFamily::new(
            config.field,
            config.n,
            0,
            strategy.local_dim(),
            strategy.family(player).clone(),
        )
    }

    /// Diagonal family: basis state `s` answers `functions[s]` restricted to
    /// `x_{≥k}`, scaled by `weights[s]` (a sub-measurement when weights ≤ 1).
    pub fn from_classical(field: FieldSpec, k: usize, functions: &[MultilinearFn], weights: &[f64]) -> Result<Self, QuantumError> {
        let d = functions.len();
        let n = functions.first().map(|f| f.arity()).unwrap_or(0);
        if functions.iter().any(|f| f.arity() != n) || weights.len() != d {
            return Err(QuantumError::Arity("functions must share an arity and have one weight each".into()));
        }
        if k > n {
            return Err(QuantumError::Arity(format!("arity {k} exceeds {n} variables")));
        }
        let outcomes = outcome_count(&field, k)?;
        let ops = mipstar::poly::points(&field, n - k)
            .map(|rest| {
                let mut povm = vec![linalg::zeros(d, d); outcomes];
                for (s, f) in functions.iter().enumerate() {
                    let code = ml_code(&field, &f.restrict_top(&rest).expect("arity fits"));
                    povm[code][(s, s)] = linalg::c(weights[s]);
                }
                povm
            })
            .collect();
        SubMeasurementFamily::new(field, n, k, d, ops)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn indices(&self) -> usize {
        self.ops.len()
    }

    pub fn outcomes(&self) -> usize {
        self.ops.first().map(|p| p.len()).unwrap_or(0)
    }

    /// `P^g_{x_{≥k}}` for the index of `x_{≥k}` in point order.
    pub fn op(&self, index: usize, g: usize) -> &CMatrix {
        &self.ops[index][g]
    }

    pub fn ops(&self) -> &[Vec<CMatrix>] {
        &self.ops
    }

    /// `P_{x_{≥k}} = Σ_g P^g_{x_{≥k}}`.
    pub fn total(&self, index: usize) -> CMatrix {
        linalg::sum(&self.ops[index], self.d)
    }

    /// Largest eigenvalue of `Σ_g P^g` over all indices.
    pub fn max_total_eigenvalue(&self) -> f64 {
        (0..self.indices())
            .map(|i| linalg::max_eigenvalue(&self.total(i)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of `x_{≥k}` for a full point index.
    pub fn index_of(&self, point: usize) -> usize {
        point / (self.field.size() as usize).pow(self.k as u32)
    }

    /// Evaluates outcome `g` at the first `k` coordinates of `x`.
    pub fn eval_outcome(&self, g: usize, x: &[FieldElement]) -> FieldElement {
        ml_from_code(&self.field, self.k, g).eval(&x[..self.k]).expect("arity fits")
    }

    fn compatible(&self, other: &SubMeasurementFamily) -> Result<(), QuantumError> {
        if self.field != other.field || self.n != other.n {
            return Err(QuantumError::Arity("families live on different games".into()));
        }
        if self.d != other.d {
            return Err(QuantumError::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        Ok(())
    }
}

/// `(cons(P, Q), inc(P, Q))` on the two-register state `rho`, with `P` on
/// the first register. When `P` has larger arity than `Q` the pair is
/// evaluated as `(Q, P)`.
pub fn cons_inc(p_fam: &SubMeasurementFamily, q_fam: &SubMeasurementFamily, rho: &DensityMatrix) -> Result<(f64, f64), QuantumError> {
    if p_fam.k > q_fam.k {
        return cons_inc(q_fam, p_fam, rho);
    }
    p_fam.compatible(q_fam)?;
    if rho.registers() != 2 || rho.local_dim() != p_fam.d {
        return Err(QuantumError::DimensionMismatch {
            expected: p_fam.d,
            got: rho.local_dim(),
        });
    }
    let field = p_fam.field;
    let p = field.size() as usize;
    let (k, l, d) = (p_fam.k, q_fam.k, p_fam.d);
    let restrict = restriction_table(&field, k, l)?;
    let span = p.pow((l - k) as u32);
    let points = p.pow(p_fam.n as u32);
    let mut cons = 0.0;
    let mut inc = 0.0;
    for x in 0..points {
        let pi = x / p.pow(k as u32);
        let qi = x / p.pow(l as u32);
        // Index of (x_k, …, x_{l-1}) in F^{l-k}.
        let v = pi % span;
        let mut grouped = vec![linalg::zeros(d, d); p_fam.outcomes()];
        for (g, q_op) in q_fam.ops[qi].iter().enumerate() {
            grouped[restrict[v][g]] += q_op;
        }
        let q_total = q_fam.total(qi);
        for (f, p_op) in p_fam.ops[pi].iter().enumerate() {
            cons += trace_pair_unchecked(p_op, &grouped[f], rho.matrix(), d).re;
            inc += trace_pair_unchecked(p_op, &(&q_total - &grouped[f]), rho.matrix(), d).re;
        }
    }
    Ok((cons / points as f64, inc / points as f64))
}

pub fn cons(p_fam: &SubMeasurementFamily, q_fam: &SubMeasurementFamily, rho: &DensityMatrix) -> Result<f64, QuantumError> {
    Ok(cons_inc(p_fam, q_fam, rho)?.0)
}

pub fn inc(p_fam: &SubMeasurementFamily, q_fam: &SubMeasurementFamily, rho: &DensityMatrix) -> Result<f64, QuantumError> {
    Ok(cons_inc(p_fam, q_fam, rho)?.1)
}

/// `Tr_ρ(Q) = E_x Σ_g Tr((Id ⊗ Q^g_{x_{≥l}}) ρ)`.
pub fn trace_rho_family(q_fam: &SubMeasurementFamily, rho: &DensityMatrix) -> Result<f64, QuantumError> {
    if rho.registers() != 2 || rho.local_dim() != q_fam.d {
        return Err(QuantumError::DimensionMismatch {
            expected: q_fam.d,
            got: rho.local_dim(),
        });
    }
    let id = linalg::identity(q_fam.d);
    let total: f64 = (0..q_fam.indices())
        .map(|i| trace_pair_unchecked(&id, &q_fam.total(i), rho.matrix(), q_fam.d).re)
        .sum();
    Ok(total / q_fam.indices() as f64)
}
