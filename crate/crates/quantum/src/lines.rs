//! The lines measurement: for a direction `i`, recover an affine function of
//! `x_i` from two sequential point measurements,
//! `B^ℓ_{x¬i} = E_{x_i≠x'_i} A_x^{ℓ(x_i)} A_{x'}^{ℓ(x'_i)} A_x^{ℓ(x_i)}`.

use mipstar::FieldElement;
use serde::Serialize;

use crate::error::QuantumError;
use crate::linalg::{self, c, CMatrix, IDENTITY_TOL};
use crate::state::rho_norm_sq_unchecked;
use crate::strategy::QuantumStrategy;

/// Outcome code of the affine function `ℓ(t) = ℓ(0) + t·(ℓ(1) − ℓ(0))`:
/// `ℓ(0) + p·ℓ(1)`, matching the arity-1 encoding of the consistency module.
pub fn line_code(p: usize, at0: usize, at1: usize) -> usize {
    at0 + p * at1
}

#[derive(Clone, Debug)]
pub struct LinesMeasurement {
    pub direction: usize,
    /// Point indices with `x_i = 0`, one per `x_{¬i}`.
    pub bases: Vec<usize>,
    /// `family[b][line_code]`.
    pub family: Vec<Vec<CMatrix>>,
    pub report: LinesReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinesReport {
    /// `max ‖Σ_ℓ B^ℓ − Id‖` (largest entry modulus) over `x_{¬i}`.
    pub completeness_error: f64,
    /// `E_x Σ_a ‖A_x^a − Σ_{ℓ(x_i)=a} B^ℓ‖²_ρ` with `ρ` the one-register state.
    pub defect: f64,
}

/// Builds `B` for player 0's measurements in direction `direction` and
/// reports completeness and the closeness defect. Non-projective
/// measurements are refused.
pub fn lines_measurement(strategy: &QuantumStrategy, direction: usize) -> Result<LinesMeasurement, QuantumError> {
    let config = strategy.config();
    if direction >= config.n {
        return Err(QuantumError::Parameter(format!(
            "direction {direction} out of range for {} variables",
            config.n
        )));
    }
    if !strategy.is_projective() {
        for (point, povm) in strategy.family(0).iter().enumerate() {
            for (outcome, m) in povm.iter().enumerate() {
                let defect = (m * m - m).camax();
                if defect > IDENTITY_TOL {
                    return Err(QuantumError::NotProjective { point, outcome, defect });
                }
            }
        }
    }
    let field = config.field;
    let p = field.size() as usize;
    let d = strategy.local_dim();
    let stride = p.pow(direction as u32);
    let elems: Vec<FieldElement> = (0..p as u64).map(|b| field.element_reduced(b)).collect();
    let bases: Vec<usize> = (0..config.points()).filter(|x| (x / stride) % p == 0).collect();
    let a = strategy.family(0);
    let norm = c(1.0 / (p * (p - 1)) as f64);
    let family: Vec<Vec<CMatrix>> = bases
        .iter()
        .map(|&base| {
            let mut out = vec![linalg::zeros(d, d); p * p];
            for at0 in 0..p {
                for at1 in 0..p {
                    let slope = elems[at1] - elems[at0];
                    let value = |u: usize| (elems[at0] + elems[u] * slope).bits() as usize;
                    let mut acc = linalg::zeros(d, d);
                    for u in 0..p {
                        let outer = &a[base + u * stride][value(u)];
                        for v in (0..p).filter(|&v| v != u) {
                            let inner = &a[base + v * stride][value(v)];
                            acc += outer * inner * outer;
                        }
                    }
                    out[line_code(p, at0, at1)] = linalg::hermitian_part(&(acc * norm));
                }
            }
            out
        })
        .collect();
    let completeness_error = family
        .iter()
        .map(|ops| (linalg::sum(ops, d) - linalg::identity(d)).camax())
        .fold(0.0, f64::max);
    let rho = strategy.state().reduced(&[0])?;
    let mut defect = 0.0;
    for (bi, &base) in bases.iter().enumerate() {
        for u in 0..p {
            let x = base + u * stride;
            let mut grouped = vec![linalg::zeros(d, d); p];
            for at0 in 0..p {
                for at1 in 0..p {
                    let slope = elems[at1] - elems[at0];
                    let value = (elems[at0] + elems[u] * slope).bits() as usize;
                    grouped[value] += &family[bi][line_code(p, at0, at1)];
                }
            }
            for (av, g) in grouped.iter().enumerate() {
                defect += rho_norm_sq_unchecked(&(&a[x][av] - g), rho.matrix());
            }
        }
    }
    defect /= config.points() as f64;
    Ok(LinesMeasurement {
        direction,
        bases,
        family,
        report: LinesReport {
            completeness_error,
            defect,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{embed_classical, random_projective_strategy};
    use mipstar::mlgame::{ClassicalStrategy, FunctionTable, MLGameConfig};
    use mipstar::rng::rng_from_seed;
    use mipstar::{FieldSpec, MultilinearFn};
    use num_rational::Ratio;

    #[test]
    fn random_projective_strategy_gives_complete_lines() {
        let cfg = MLGameConfig::new(3, 1, FieldSpec::gf4()).unwrap();
        let mut rng = rng_from_seed(1);
        let q = random_projective_strategy(&cfg, 4, &mut rng).unwrap();
        let lines = lines_measurement(&q, 0).unwrap();
        assert!(lines.report.completeness_error < 1e-10);
        assert!(lines.family.iter().flatten().all(|m| linalg::is_psd(m, 1e-10)));
    }

    #[test]
    fn multilinear_strategy_has_zero_defect() {
        let cfg = MLGameConfig::new(3, 2, FieldSpec::gf4()).unwrap();
        let field = cfg.field;
        let mut rng = rng_from_seed(2);
        let components = (0..3)
            .map(|_| {
                let g = MultilinearFn::extend((0..4).map(|_| field.random(&mut rng)).collect()).unwrap();
                (Ratio::new(1, 3), vec![FunctionTable::from_multilinear(field, &g); 3])
            })
            .collect();
        let q = embed_classical(&cfg, &ClassicalStrategy::mixture(components).unwrap()).unwrap();
        for i in 0..2 {
            let lines = lines_measurement(&q, i).unwrap();
            assert!(lines.report.defect < 1e-10);
            assert!(lines.report.completeness_error < 1e-10);
        }
    }

    #[test]
    fn non_projective_strategy_is_refused() {
        let cfg = MLGameConfig::new(3, 1, FieldSpec::gf4()).unwrap();
        let mut rng = rng_from_seed(3);
        let state = crate::strategy::random_symmetric_state(2, 3, &mut rng).unwrap();
        let family = (0..4).map(|_| linalg::random_povm(2, 4, &mut rng)).collect();
        let q = QuantumStrategy::new(cfg, state, vec![family]).unwrap();
        assert!(matches!(lines_measurement(&q, 0), Err(QuantumError::NotProjective { .. })));
    }
}
