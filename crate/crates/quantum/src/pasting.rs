//! Pasting: lifts a family of sub-measurements of arity `a` to arity `a + 1`
//! by interpolating along coordinate `a`, using the truncated Neumann series
//! `T̃ = (Σ_{r=0}^{R} (Id − T_{x>a})^r)^{1/2}` as a pseudo-inverse square root.

use serde::Serialize;

use crate::consistency::{restriction_table, SubMeasurementFamily};
use crate::error::QuantumError;
use crate::linalg::{self, c, CMatrix, IDENTITY_TOL};

/// Largest local dimension accepted.
pub const MAX_PASTING_DIM: usize = 8;

/// `R = ⌈(10/η)·ln(1/η)⌉`, clamped at 0.
pub fn series_length(eta: f64) -> Result<usize, QuantumError> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(QuantumError::Parameter(format!("η must be positive, got {eta}")));
    }
    Ok(((10.0 / eta) * (1.0 / eta).ln()).ceil().max(0.0) as usize)
}

/// `Σ_{r=0}^{R} (1 − t)^r` for `t` in `[0, 1]`.
fn geometric(t: f64, big_r: usize) -> f64 {
    let t = t.clamp(0.0, 1.0);
    if t < 1e-12 {
        return (big_r + 1) as f64;
    }
    (1.0 - (1.0 - t).powi(big_r as i32 + 1)) / t
}

#[derive(Clone, Debug)]
pub struct PastingResult {
    pub v: SubMeasurementFamily,
    pub series_length: usize,
    /// `(1 + R/p)^{-1}`.
    pub scale: f64,
    pub report: PastingReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PastingReport {
    /// Largest eigenvalue of `Σ_g V^g` over all `x_{>a}`.
    pub max_eigenvalue: f64,
    pub is_sub_measurement: bool,
}

/// Builds
/// `V^g_{x>a} = (1+R/p)^{-1} E_y T̃ (E_{x≠y} T^{g|x}_{x,x>a}) T̃ T^{g|y}_{y,x>a} T̃ (E_{x≠y} T^{g|x}_{x,x>a}) T̃`
/// where `g ∈ ML(F^{a+1}, F)` and `g|x` fixes its last variable to `x`.
pub fn pasting(t: &SubMeasurementFamily, eta: f64) -> Result<PastingResult, QuantumError> {
    let big_r = series_length(eta)?;
    let field = t.field();
    let p = field.size() as usize;
    if p < 4 {
        return Err(QuantumError::Parameter("pasting needs at least four field elements".into()));
    }
    let a = t.arity();
    if a >= t.n() {
        return Err(QuantumError::Arity(format!("arity {a} cannot be raised past {} variables", t.n())));
    }
    let d = t.local_dim();
    if d > MAX_PASTING_DIM {
        return Err(QuantumError::TooLarge(d));
    }
    let restrict = restriction_table(&field, a, a + 1)?;
    let outcomes = restrict[0].len();
    let scale = 1.0 / (1.0 + big_r as f64 / p as f64);
    let indices = p.pow((t.n() - a - 1) as u32);
    let mut ops = Vec::with_capacity(indices);
    let mut max_eigenvalue = f64::NEG_INFINITY;
    for rest in 0..indices {
        // T index of (x_a = u, x_{>a} = rest).
        let at = |u: usize| rest * p + u;
        let mut avg = linalg::zeros(d, d);
        for u in 0..p {
            avg += t.total(at(u));
        }
        avg *= c(1.0 / p as f64);
        let tilde = linalg::spectral_map(&avg, |x| geometric(x, big_r).sqrt());
        let mut v_ops = Vec::with_capacity(outcomes);
        for g in 0..outcomes {
            let mut acc = linalg::zeros(d, d);
            for y in 0..p {
                let mut others = linalg::zeros(d, d);
                for x in (0..p).filter(|&x| x != y) {
                    others += t.op(at(x), restrict[x][g]);
                }
                others *= c(1.0 / (p - 1) as f64);
                let outer = &tilde * &others * &tilde;
                acc += &outer * t.op(at(y), restrict[y][g]) * &outer;
            }
            v_ops.push(linalg::hermitian_part(&(acc * c(scale / p as f64))));
        }
        let top = linalg::max_eigenvalue(&linalg::sum(&v_ops, d));
        max_eigenvalue = max_eigenvalue.max(top);
        ops.push(v_ops);
    }
    let v = SubMeasurementFamily::unchecked(field, t.n(), a + 1, d, ops)?;
    Ok(PastingResult {
        v,
        series_length: big_r,
        scale,
        report: PastingReport {
            max_eigenvalue,
            is_sub_measurement: max_eigenvalue <= 1.0 + IDENTITY_TOL,
        },
    })
}

/// Random family of sub-measurements of arity `k`: per index, a random POVM
/// on `p^(2^k)` outcomes scaled by a uniform factor.
pub fn random_family<R: rand::Rng + ?Sized>(
    field: mipstar::FieldSpec,
    n: usize,
    k: usize,
    d: usize,
    rng: &mut R,
) -> Result<SubMeasurementFamily, QuantumError> {
    let p = field.size() as usize;
    let outcomes = crate::consistency::outcome_count(&field, k)?;
    let ops: Vec<Vec<CMatrix>> = (0..p.pow((n - k) as u32))
        .map(|_| linalg::random_sub_povm(d, outcomes, rng))
        .collect();
    SubMeasurementFamily::new(field, n, k, d, ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::{ml_code, SubMeasurementFamily};
    use mipstar::rng::rng_from_seed;
    use mipstar::{FieldSpec, MultilinearFn};

    #[test]
    fn series_length_grows_as_eta_shrinks() {
        assert_eq!(series_length(0.2).unwrap(), 81);
        assert_eq!(series_length(0.1).unwrap(), 231);
        assert!(series_length(0.05).unwrap() > 2 * series_length(0.1).unwrap());
        assert!(series_length(0.0).is_err());
        assert!(series_length(-1.0).is_err());
    }

    #[test]
    fn complete_classical_family_is_interpolated() {
        let field = FieldSpec::gf4();
        let mut rng = rng_from_seed(1);
        let fs: Vec<MultilinearFn> = (0..3)
            .map(|_| MultilinearFn::extend((0..4).map(|_| field.random(&mut rng)).collect()).unwrap())
            .collect();
        let t = SubMeasurementFamily::from_classical(field, 0, &fs, &[1.0; 3]).unwrap();
        let result = pasting(&t, 0.2).unwrap();
        let expected = SubMeasurementFamily::from_classical(field, 1, &fs, &[result.scale; 3]).unwrap();
        for idx in 0..expected.indices() {
            for g in 0..expected.outcomes() {
                assert!((result.v.op(idx, g) - expected.op(idx, g)).camax() < 1e-12);
            }
        }
        assert!(result.report.is_sub_measurement);
        // Sanity: the code of f_0 restricted to x_1 = 0 carries weight.
        let code = ml_code(&field, &fs[0].restrict_top(&[field.zero()]).unwrap());
        assert!(result.v.op(0, code)[(0, 0)].re > 0.0);
    }

    #[test]
    fn random_families_stay_sub_measurements() {
        let field = FieldSpec::gf4();
        for seed in 0..5 {
            let mut rng = rng_from_seed(seed);
            let t = random_family(field, 2, 0, 3, &mut rng).unwrap();
            for eta in [0.2, 0.1] {
                let result = pasting(&t, eta).unwrap();
                assert!(result.report.is_sub_measurement, "{:?}", result.report);
            }
        }
    }
}
