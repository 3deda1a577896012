//! The convex program behind self-improvement:
//!
//! ```text
//! minimize   E_x Σ_g ‖Ŝ_x^g − √(R^g_{x≥k})‖²_ρ
//! subject to Σ_{g : g(x_{<k}) = a} Ŝ_x^g (Ŝ_x^g)† ≤ A_x^a   for all x, a
//! ```
//!
//! with `A` a projective family of point measurements and `R` a family of
//! sub-measurements of arity `k`. Both the explicit feasible point
//! `Ŝ_x^g = A_x^{g(x<k)} √(R^g)` and a projected-gradient solver are provided.

use mipstar::FieldElement;
use serde::Serialize;

use crate::consistency::{cons_inc, ml_from_code, SubMeasurementFamily};
use crate::error::QuantumError;
use crate::linalg::{self, c, CMatrix, IDENTITY_TOL, INEQUALITY_TOL};
use crate::state::{rho_norm_sq_unchecked, DensityMatrix};

/// Largest local dimension accepted by the feasibility check.
pub const MAX_FEASIBLE_DIM: usize = 8;
/// Largest local dimension accepted by the solver.
pub const MAX_SOLVER_DIM: usize = 6;

/// `Ŝ[x][g]` over all points `x` and outcomes `g` of `R`.
pub type Factorization = Vec<Vec<CMatrix>>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// Objective value at the feasible point.
    pub objective: f64,
    /// Largest `-λ_min(A_x^a − Σ Ŝ Ŝ†)` over all constraints (≤ 0 when strictly feasible).
    pub max_violation: f64,
    pub feasible: bool,
    pub inc_a_r: f64,
    pub inc_a_a: f64,
    /// `2·inc(A,R) + 8·inc(A,A)^{1/2} + 1e-6`.
    pub bound: f64,
    pub within_bound: bool,
}

struct Problem<'a> {
    a: &'a SubMeasurementFamily,
    r: &'a SubMeasurementFamily,
    rho1: CMatrix,
    /// `sqrt_r[index of x≥k][g]`.
    sqrt_r: Vec<Vec<CMatrix>>,
    /// `groups[x][a]`: outcomes `g` with `g(x_{<k}) = a`.
    groups: Vec<Vec<Vec<usize>>>,
    points: usize,
    d: usize,
}

impl<'a> Problem<'a> {
    fn new(a: &'a SubMeasurementFamily, r: &'a SubMeasurementFamily, rho2: &DensityMatrix, max_dim: usize) -> Result<Self, QuantumError> {
        if a.arity() != 0 {
            return Err(QuantumError::Arity("A must be a family of point measurements".into()));
        }
        if a.field() != r.field() || a.n() != r.n() || a.local_dim() != r.local_dim() {
            return Err(QuantumError::Arity("A and R live on different games".into()));
        }
        let d = a.local_dim();
        if d > max_dim {
            return Err(QuantumError::TooLarge(d));
        }
        if rho2.registers() != 2 || rho2.local_dim() != d {
            return Err(QuantumError::DimensionMismatch {
                expected: d,
                got: rho2.local_dim(),
            });
        }
        for (point, povm) in a.ops().iter().enumerate() {
            for (outcome, m) in povm.iter().enumerate() {
                let defect = (m * m - m).camax();
                if defect > IDENTITY_TOL {
                    return Err(QuantumError::NotProjective { point, outcome, defect });
                }
            }
        }
        let field = a.field();
        let p = field.size() as usize;
        let points = p.pow(a.n() as u32);
        let rho1 = rho2.reduced(&[0])?.matrix().clone();
        let sqrt_r = r
            .ops()
            .iter()
            .map(|povm| povm.iter().map(linalg::psd_sqrt).collect())
            .collect();
        let gs: Vec<_> = (0..r.outcomes()).map(|g| ml_from_code(&field, r.arity(), g)).collect();
        let groups = mipstar::poly::points(&field, a.n())
            .map(|x| {
                let mut out = vec![Vec::new(); p];
                for (code, g) in gs.iter().enumerate() {
                    let value: FieldElement = g.eval(&x[..r.arity()]).expect("arity fits");
                    out[value.bits() as usize].push(code);
                }
                out
            })
            .collect();
        Ok(Problem {
            a,
            r,
            rho1,
            sqrt_r,
            groups,
            points,
            d,
        })
    }

    fn target(&self, x: usize, g: usize) -> &CMatrix {
        &self.sqrt_r[self.r.index_of(x)][g]
    }

    fn objective(&self, s: &Factorization) -> f64 {
        let mut total = 0.0;
        for (x, row) in s.iter().enumerate() {
            for (g, m) in row.iter().enumerate() {
                total += rho_norm_sq_unchecked(&(m - self.target(x, g)), &self.rho1);
            }
        }
        total / self.points as f64
    }

    /// Largest violation `-λ_min(A_x^a − Σ_{g ∈ group} Ŝ Ŝ†)`.
    fn violation(&self, s: &Factorization) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for x in 0..self.points {
            for (av, group) in self.groups[x].iter().enumerate() {
                let mut gram = linalg::zeros(self.d, self.d);
                for &g in group {
                    gram += &s[x][g] * s[x][g].adjoint();
                }
                worst = worst.max(-linalg::min_eigenvalue(&(self.a.op(x, av) - gram)));
            }
        }
        worst
    }

    fn feasible_point(&self) -> Factorization {
        (0..self.points)
            .map(|x| {
                (0..self.r.outcomes())
                    .map(|g| {
                        let av = self.groups[x].iter().position(|grp| grp.contains(&g)).expect("every g has a value");
                        self.a.op(x, av) * self.target(x, g)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Evaluates the explicit feasible point `Ŝ_x^g = A_x^{g(x<k)} √(R^g_{x≥k})`
/// on the two-register state `rho2` (its first marginal weighs the
/// objective).
pub fn self_improvement_feasible(
    a: &SubMeasurementFamily,
    r: &SubMeasurementFamily,
    rho2: &DensityMatrix,
) -> Result<FeasibilityReport, QuantumError> {
    let problem = Problem::new(a, r, rho2, MAX_FEASIBLE_DIM)?;
    let s = problem.feasible_point();
    let objective = problem.objective(&s);
    let max_violation = problem.violation(&s);
    let (_, inc_a_r) = cons_inc(a, r, rho2)?;
    let (_, inc_a_a) = cons_inc(a, a, rho2)?;
    let bound = 2.0 * inc_a_r + 8.0 * inc_a_a.max(0.0).sqrt() + 1e-6;
    Ok(FeasibilityReport {
        objective,
        max_violation,
        feasible: max_violation <= INEQUALITY_TOL,
        inc_a_r,
        inc_a_a,
        bound,
        within_bound: objective <= bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStart {
    /// The explicit feasible point.
    FeasiblePoint,
    /// All `Ŝ = 0`.
    Zero,
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub s_hat: Factorization,
    /// Objective before the first iteration and after each one.
    pub history: Vec<f64>,
    pub objective: f64,
    pub max_violation: f64,
    pub converged: bool,
    /// Every iterate's objective was at most its predecessor's (up to rounding).
    pub monotone: bool,
}

/// Projected gradient descent with step `1/L`, `L = 2λ_max(ρ)`. The
/// constraint for `(x, a)` couples the block row `M = [Ŝ^g]_{g(x<k)=a}`;
/// since `A_x^a` is a projector, `M M† ≤ A_x^a` iff `M = A_x^a M` and
/// `‖M‖ ≤ 1`, so the projection multiplies by `A_x^a` and clips singular
/// values at 1.
pub fn self_improvement_solve(
    a: &SubMeasurementFamily,
    r: &SubMeasurementFamily,
    rho2: &DensityMatrix,
    start: SolverStart,
    iterations: usize,
    tolerance: f64,
) -> Result<SolverResult, QuantumError> {
    let problem = Problem::new(a, r, rho2, MAX_SOLVER_DIM)?;
    let d = problem.d;
    let mut s = match start {
        SolverStart::FeasiblePoint => problem.feasible_point(),
        SolverStart::Zero => vec![vec![linalg::zeros(d, d); r.outcomes()]; problem.points],
    };
    let lambda = linalg::max_eigenvalue(&problem.rho1).max(f64::MIN_POSITIVE);
    let step = problem.rho1.clone() * c(1.0 / lambda);
    let mut history = vec![problem.objective(&s)];
    let mut converged = false;
    let mut monotone = true;
    for _ in 0..iterations {
        let mut next = s.clone();
        for x in 0..problem.points {
            for (av, group) in problem.groups[x].iter().enumerate() {
                if group.is_empty() {
                    continue;
                }
                let mut block = linalg::zeros(d, d * group.len());
                for (j, &g) in group.iter().enumerate() {
                    let moved = &s[x][g] - &step * (&s[x][g] - problem.target(x, g));
                    block.view_mut((0, j * d), (d, d)).copy_from(&moved);
                }
                let projected = project(a.op(x, av), block);
                for (j, &g) in group.iter().enumerate() {
                    next[x][g] = projected.view((0, j * d), (d, d)).into_owned();
                }
            }
        }
        let value = problem.objective(&next);
        let previous = *history.last().expect("non-empty history");
        if value > previous + 1e-12 * (1.0 + previous) {
            monotone = false;
        }
        history.push(value);
        s = next;
        if (previous - value).abs() <= tolerance {
            converged = true;
            break;
        }
    }
    let max_violation = problem.violation(&s);
    Ok(SolverResult {
        objective: *history.last().expect("non-empty history"),
        s_hat: s,
        history,
        max_violation,
        converged,
        monotone,
    })
}

/// Nearest point (Frobenius) to `m` in `{M : M = P M, ‖M‖ ≤ 1}`: with
/// `B = P m`, clipping the singular values of `B` at 1 equals
/// `h(B B†) B` for `h(λ) = min(1, λ^{-1/2})`.
fn project(projector: &CMatrix, m: CMatrix) -> CMatrix {
    let inside = projector * m;
    let gram = &inside * inside.adjoint();
    let shrink = linalg::spectral_map(&gram, |l| if l > 1.0 { 1.0 / l.sqrt() } else { 1.0 });
    shrink * inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, random_projective};
    use mipstar::rng::rng_from_seed;
    use mipstar::{FieldSpec, MultilinearFn};

    /// Diagonal `A` from functions `f_s`, `R` from their restrictions: the
    /// feasible point equals `√R` exactly.
    fn aligned_instance(seed: u64) -> (SubMeasurementFamily, SubMeasurementFamily, DensityMatrix) {
        let field = FieldSpec::gf4();
        let mut rng = rng_from_seed(seed);
        let fs: Vec<MultilinearFn> = (0..3)
            .map(|_| MultilinearFn::extend((0..4).map(|_| field.random(&mut rng)).collect()).unwrap())
            .collect();
        let a = SubMeasurementFamily::from_classical(field, 0, &fs, &[1.0; 3]).unwrap();
        let r = SubMeasurementFamily::from_classical(field, 1, &fs, &[0.9, 0.5, 0.7]).unwrap();
        // Classically correlated state on two registers with full-rank marginal.
        let mut rho = linalg::zeros(9, 9);
        for (s, w) in [0.5, 0.3, 0.2].iter().enumerate() {
            rho[(s * 3 + s, s * 3 + s)] = c(*w);
        }
        (a, r, DensityMatrix::new(3, 2, rho).unwrap())
    }

    fn random_instance(seed: u64, d: usize) -> (SubMeasurementFamily, SubMeasurementFamily, DensityMatrix) {
        let field = FieldSpec::gf4();
        let mut rng = rng_from_seed(seed);
        let a_ops = (0..16).map(|_| random_projective(d, 4, &mut rng)).collect();
        let a = SubMeasurementFamily::new(field, 2, 0, d, a_ops).unwrap();
        let r_ops = (0..4).map(|_| linalg::random_sub_povm(d, 16, &mut rng)).collect();
        let r = SubMeasurementFamily::new(field, 2, 1, d, r_ops).unwrap();
        let rho = DensityMatrix::new(d, 2, random_density(d * d, d * d, &mut rng)).unwrap();
        (a, r, rho.swap_symmetrized().unwrap())
    }

    #[test]
    fn aligned_instance_has_zero_objective() {
        let (a, r, rho) = aligned_instance(1);
        let report = self_improvement_feasible(&a, &r, &rho).unwrap();
        assert!(report.objective < 1e-12);
        assert!(report.feasible);
        assert!(report.within_bound);
    }

    #[test]
    fn random_instance_is_feasible_and_within_bound() {
        for seed in 0..5 {
            let (a, r, rho) = random_instance(seed, 2);
            let report = self_improvement_feasible(&a, &r, &rho).unwrap();
            assert!(report.feasible, "{report:?}");
            assert!(report.within_bound, "{report:?}");
        }
    }

    #[test]
    fn solver_descends_and_stays_feasible() {
        let (a, r, rho) = random_instance(7, 2);
        let feasible = self_improvement_feasible(&a, &r, &rho).unwrap();
        let result = self_improvement_solve(&a, &r, &rho, SolverStart::FeasiblePoint, 200, 1e-14).unwrap();
        assert!(result.monotone);
        assert!(result.objective <= feasible.objective + 1e-12);
        assert!(result.max_violation <= 1e-8);
    }

    #[test]
    fn solver_reaches_zero_on_aligned_instance() {
        let (a, r, rho) = aligned_instance(3);
        let result = self_improvement_solve(&a, &r, &rho, SolverStart::Zero, 2000, 1e-16).unwrap();
        assert!(result.monotone);
        assert!(result.objective <= 1e-8, "{}", result.objective);
    }

    #[test]
    fn non_projective_a_is_refused() {
        let field = FieldSpec::gf4();
        let mut rng = rng_from_seed(4);
        let a_ops = (0..4).map(|_| linalg::random_povm(2, 4, &mut rng)).collect();
        let a = SubMeasurementFamily::new(field, 1, 0, 2, a_ops).unwrap();
        let r_ops = vec![linalg::random_sub_povm(2, 16, &mut rng)];
        let r = SubMeasurementFamily::new(field, 1, 1, 2, r_ops).unwrap();
        let rho = DensityMatrix::new(2, 2, random_density(4, 4, &mut rng)).unwrap();
        assert!(matches!(
            self_improvement_feasible(&a, &r, &rho),
            Err(QuantumError::NotProjective { .. })
        ));
    }
}
