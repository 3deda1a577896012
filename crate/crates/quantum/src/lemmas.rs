//! Randomized checks of the operator inequalities used in the soundness
//! analysis. Each check evaluates both sides on independent random
//! instances and records the largest `lhs − rhs`.

use std::fmt::Write as _;

use mipstar::rng::{derive_seed, rng_from_seed, ExperimentRng};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{self, c, CMatrix};
use crate::state::partial_trace;

/// Instances with `lhs − rhs` above this count as violations.
pub const SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Lemma {
    /// `‖XρX* − YρY*‖₁ ≤ 2√Tr((X−Y)ρ(X−Y)*)` for contractions `X`, `Y`.
    GentleMeasurement,
    /// `‖Σ √A_i ρ √A_i − √B_i ρ √B_i‖₁ ≤ 2(Σ Tr((√A_i − √B_i)² ρ))^{1/2}`.
    GentleSum,
    /// Post-measurement disturbance on the first register of a state that is
    /// symmetric in its first two registers: `≤ 2√δ + δ`.
    GentleThreeRegister,
    /// `E_x ‖A_x − E A‖²_ρ ≤ 2n·E_{i,x,x'_i} ‖A_x − A_{x'}‖²_ρ` on `S^n`, `|S| = 4`.
    Expansion,
    /// `‖A†B‖₁ ≤ ‖A‖_F ‖B‖_F`.
    TraceNormCauchySchwarz,
}

impl Lemma {
    pub const ALL: [Lemma; 5] = [
        Lemma::GentleMeasurement,
        Lemma::GentleSum,
        Lemma::GentleThreeRegister,
        Lemma::Expansion,
        Lemma::TraceNormCauchySchwarz,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Lemma::GentleMeasurement => "gentle_measurement",
            Lemma::GentleSum => "gentle_sum",
            Lemma::GentleThreeRegister => "gentle_three_register",
            Lemma::Expansion => "expansion",
            Lemma::TraceNormCauchySchwarz => "trace_norm_cauchy_schwarz",
        }
    }

    /// `(lhs, rhs)` on the instance drawn from `rng`, with local dimension at
    /// most `max_dim`.
    pub fn sides(&self, rng: &mut ExperimentRng, max_dim: usize) -> (f64, f64) {
        let max_dim = max_dim.max(2);
        match self {
            Lemma::GentleMeasurement => {
                let d = rng.gen_range(2..=max_dim);
                let k = rng.gen_range(2..=max_dim);
                let rank = rng.gen_range(1..=d);
                let rho = linalg::random_density(d, rank, rng);
                let x = linalg::random_contraction(k, d, rng);
                let y = if rng.gen_bool(0.5) {
                    // Nearby pair, where the bound is closer to tight.
                    let e = linalg::random_contraction(k, d, rng) * c(rng.gen_range(0.0..0.2));
                    let y = &x + e;
                    let norm = linalg::operator_norm(&y);
                    if norm > 1.0 { y * c(1.0 / norm) } else { y }
                } else {
                    linalg::random_contraction(k, d, rng)
                };
                gentle_sides(&x, &y, &rho)
            }
            Lemma::GentleSum => {
                let d = rng.gen_range(2..=max_dim);
                let m = rng.gen_range(1..=4);
                let rho = linalg::random_density(d, rng.gen_range(1..=d), rng);
                let a = linalg::random_sub_povm(d, m, rng);
                let b = linalg::random_sub_povm(d, m, rng);
                gentle_sum_sides(&a, &b, &rho)
            }
            Lemma::GentleThreeRegister => {
                let d = rng.gen_range(2..=max_dim.min(3));
                let m = rng.gen_range(2..=4);
                let dim = d * d * d;
                let sigma = linalg::random_density(dim, rng.gen_range(1..=dim), rng);
                let sigma = (&sigma + swap_first_two(&sigma, d)) * c(0.5);
                let povm = if rng.gen_bool(0.5) {
                    linalg::random_povm(d, m, rng)
                } else {
                    linalg::random_projective(d, m, rng)
                };
                gentle_three_sides(&povm, &sigma, d)
            }
            Lemma::Expansion => {
                let n = rng.gen_range(1..=3);
                let d = rng.gen_range(2..=max_dim.min(4));
                let points = 4usize.pow(n as u32);
                let rho = linalg::random_density(d, rng.gen_range(1..=d), rng);
                let base = random_effect(d, rng);
                let t: f64 = rng.gen_range(0.0..1.0);
                let family: Vec<CMatrix> = (0..points)
                    .map(|_| &base * c(1.0 - t) + random_effect(d, rng) * c(t))
                    .collect();
                expansion_sides(&family, n, 4, &rho)
            }
            Lemma::TraceNormCauchySchwarz => {
                let rows = rng.gen_range(1..=max_dim);
                let a = linalg::ginibre(rows, rng.gen_range(1..=max_dim), rng);
                let b = linalg::ginibre(rows, rng.gen_range(1..=max_dim), rng);
                let lhs = linalg::trace_norm(&(a.adjoint() * &b));
                (lhs, linalg::frobenius_norm(&a) * linalg::frobenius_norm(&b))
            }
        }
    }
}

/// `0 ≤ E ≤ Id` with uniform random spectrum.
fn random_effect<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let u = linalg::random_unitary(d, rng);
    let diag = CMatrix::from_fn(d, d, |i, j| if i == j { c(rng.gen_range(0.0..=1.0)) } else { c(0.0) });
    linalg::hermitian_part(&(&u * diag * u.adjoint()))
}

pub fn gentle_sides(x: &CMatrix, y: &CMatrix, rho: &CMatrix) -> (f64, f64) {
    let lhs = linalg::trace_norm(&(x * rho * x.adjoint() - y * rho * y.adjoint()));
    let diff = x - y;
    let inner = (&diff * rho * diff.adjoint()).trace().re.max(0.0);
    (lhs, 2.0 * inner.sqrt())
}

pub fn gentle_sum_sides(a: &[CMatrix], b: &[CMatrix], rho: &CMatrix) -> (f64, f64) {
    let d = rho.nrows();
    let mut diff = linalg::zeros(d, d);
    let mut inner = 0.0;
    for (ai, bi) in a.iter().zip(b) {
        let (sa, sb) = (linalg::psd_sqrt(ai), linalg::psd_sqrt(bi));
        diff += &sa * rho * &sa - &sb * rho * &sb;
        let delta = &sa - &sb;
        inner += (&delta * &delta * rho).trace().re;
    }
    (linalg::trace_norm(&diff), 2.0 * inner.max(0.0).sqrt())
}

/// `S σ S` for the swap `S` of the first two of three registers.
fn swap_first_two(sigma: &CMatrix, d: usize) -> CMatrix {
    let perm = |i: usize| {
        let (a, rest) = (i / (d * d), i % (d * d));
        let (b, cc) = (rest / d, rest % d);
        (b * d + a) * d + cc
    };
    CMatrix::from_fn(sigma.nrows(), sigma.ncols(), |i, j| sigma[(perm(i), perm(j))])
}

pub fn gentle_three_sides(povm: &[CMatrix], sigma: &CMatrix, d: usize) -> (f64, f64) {
    let id = linalg::identity(d);
    let mut delta = 0.0;
    for (i, ai) in povm.iter().enumerate() {
        for (j, aj) in povm.iter().enumerate() {
            if i != j {
                let op = linalg::kron(&linalg::kron(ai, aj), &id);
                delta += (op * sigma).trace().re;
            }
        }
    }
    let tau = partial_trace(sigma, d, 3, &[0, 2]).expect("three registers");
    let mut post = linalg::zeros(d * d, d * d);
    for ai in povm {
        let s = linalg::kron(&linalg::psd_sqrt(ai), &id);
        post += &s * &tau * &s;
    }
    let delta = delta.max(0.0);
    (linalg::trace_norm(&(post - tau)), 2.0 * delta.sqrt() + delta)
}

/// Points of `S^n` are indexed in base `p` with coordinate 0 least
/// significant; the expectation over `(i, x, x'_i)` includes `x'_i = x_i`.
pub fn expansion_sides(family: &[CMatrix], n: usize, p: usize, rho: &CMatrix) -> (f64, f64) {
    let d = rho.nrows();
    let norm_sq = |m: &CMatrix| (m * m.adjoint() * rho).trace().re.max(0.0);
    let mean = linalg::sum(family, d) * c(1.0 / family.len() as f64);
    let lhs = family.iter().map(|a| norm_sq(&(a - &mean))).sum::<f64>() / family.len() as f64;
    let mut eps = 0.0;
    for i in 0..n {
        let stride = p.pow(i as u32);
        for (x, ax) in family.iter().enumerate() {
            let base = x - ((x / stride) % p) * stride;
            for v in 0..p {
                eps += norm_sq(&(ax - &family[base + v * stride]));
            }
        }
    }
    eps /= (n * family.len() * p) as f64;
    (lhs, 2.0 * n as f64 * eps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaRow {
    pub lemma: &'static str,
    pub instances: usize,
    /// Largest `lhs − rhs` (negative when every instance holds with room).
    pub max_violation: f64,
    /// Seed of the instance attaining `max_violation`.
    pub worst_seed: u64,
    /// Number of instances with `lhs − rhs > SLACK`.
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub rows: Vec<LemmaRow>,
}

impl LemmaReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.violations == 0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lemma,instances,max_violation,worst_seed,violations\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6e},{},{}",
                r.lemma, r.instances, r.max_violation, r.worst_seed, r.violations
            );
        }
        out
    }
}

/// Runs every lemma on `instances` random instances. Instance `t` of lemma
/// `l` uses seed `derive_seed(derive_seed(seed, l), t)`, so the report does
/// not depend on the number of worker threads.
pub fn lemma_checks(instances: usize, seed: u64, max_dim: usize) -> LemmaReport {
    let rows = Lemma::ALL
        .iter()
        .enumerate()
        .map(|(l, lemma)| {
            let lemma_seed = derive_seed(seed, l as u64);
            let results: Vec<(u64, f64)> = (0..instances as u64)
                .into_par_iter()
                .map(|t| {
                    let s = derive_seed(lemma_seed, t);
                    let (lhs, rhs) = lemma.sides(&mut rng_from_seed(s), max_dim);
                    (s, lhs - rhs)
                })
                .collect();
            let (worst_seed, max_violation) = results
                .iter()
                .copied()
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            LemmaRow {
                lemma: lemma.name(),
                instances,
                max_violation,
                worst_seed,
                violations: results.iter().filter(|(_, v)| *v > SLACK).count(),
            }
        })
        .collect();
    LemmaReport { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_operators_give_zero_left_side() {
        let mut rng = rng_from_seed(1);
        let rho = linalg::random_density(4, 4, &mut rng);
        let x = linalg::random_contraction(4, 4, &mut rng);
        let (lhs, rhs) = gentle_sides(&x, &x, &rho);
        assert!(lhs < 1e-12 && rhs < 1e-12);
    }

    #[test]
    fn constant_family_has_zero_expansion_sides() {
        let mut rng = rng_from_seed(2);
        let rho = linalg::random_density(3, 3, &mut rng);
        let a = random_effect(3, &mut rng);
        let (lhs, rhs) = expansion_sides(&vec![a; 16], 2, 4, &rho);
        assert!(lhs < 1e-12 && rhs < 1e-12);
    }

    #[test]
    fn small_sweep_has_no_violations() {
        let report = lemma_checks(50, 3, 6);
        assert!(report.passes(), "{}", report.to_csv());
        assert_eq!(report.rows.len(), 5);
    }

    #[test]
    fn report_is_reproducible() {
        assert_eq!(lemma_checks(10, 4, 4).to_csv(), lemma_checks(10, 4, 4).to_csv());
    }
}
