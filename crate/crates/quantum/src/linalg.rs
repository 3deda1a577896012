//! Dense complex linear algebra used by every other module.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for structural identities (completeness, projectivity, unit trace).
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for derived inequalities.
pub const INEQUALITY_TOL: f64 = 1e-8;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `(m + m†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).camax() <= tol
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn spectral_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, col| vectors[(r, col)] * f(values[col]));
    &scaled * vectors.adjoint()
}

/// Positive square root; tiny negative eigenvalues from rounding are clipped.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    spectral_map(m, |x| x.max(0.0).sqrt())
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigh(m).0.first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    eigh(m).0.last().copied().unwrap_or(0.0)
}

pub fn is_psd(m: &CMatrix, tol: f64) -> bool {
    is_hermitian(m, tol) && min_eigenvalue(m) >= -tol
}

pub fn is_projector(m: &CMatrix, tol: f64) -> bool {
    is_hermitian(m, tol) && (m * m - m).camax() <= tol
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if is_hermitian(m, 1e-14) {
        return eigh(m).0.iter().map(|x| x.abs()).sum();
    }
    m.clone().svd(false, false).singular_values.iter().sum()
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.norm()
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// Sum of a list of equally sized matrices.
pub fn sum(ms: &[CMatrix], d: usize) -> CMatrix {
    ms.iter().fold(zeros(d, d), |acc, m| acc + m)
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-random unitary (QR of a Ginibre matrix with the phase correction).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { c(1.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random density matrix of the given rank (`G G† / Tr`).
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = m.trace();
    m / t
}

/// Random matrix with operator norm uniform in `[0, 1]`.
pub fn random_contraction<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(rows, cols, rng);
    let norm = operator_norm(&g);
    let scale: f64 = rng.gen_range(0.0..=1.0);
    g * c(scale / norm)
}

/// Random POVM with `outcomes` elements: `S^{-1/2} G_i G_i† S^{-1/2}`.
pub fn random_povm<R: Rng + ?Sized>(d: usize, outcomes: usize, rng: &mut R) -> Vec<CMatrix> {
    let raw: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(d, d, rng);
            &g * g.adjoint()
        })
        .collect();
    let total = sum(&raw, d);
    let inv_sqrt = spectral_map(&total, |x| 1.0 / x.sqrt());
    raw.iter().map(|m| hermitian_part(&(&inv_sqrt * m * &inv_sqrt))).collect()
}

/// Random sub-measurement: a random POVM scaled by a uniform factor in `(0, 1]`.
pub fn random_sub_povm<R: Rng + ?Sized>(d: usize, outcomes: usize, rng: &mut R) -> Vec<CMatrix> {
    let t: f64 = 1.0 - rng.gen_range(0.0..1.0);
    random_povm(d, outcomes, rng).into_iter().map(|m| m * c(t)).collect()
}

/// Random projective measurement: the columns of a Haar unitary are dealt to
/// uniformly chosen outcomes (some outcomes may get none).
pub fn random_projective<R: Rng + ?Sized>(d: usize, outcomes: usize, rng: &mut R) -> Vec<CMatrix> {
    let u = random_unitary(d, rng);
    let mut out = vec![zeros(d, d); outcomes];
    for col in 0..d {
        let a = rng.gen_range(0..outcomes);
        let v = u.column(col);
        out[a] += &v * v.adjoint();
    }
    out
}

/// Projector onto the computational basis vector `s`.
pub fn basis_projector(d: usize, s: usize) -> CMatrix {
    let mut m = zeros(d, d);
    m[(s, s)] = c(1.0);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use mipstar::rng::rng_from_seed;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = rng_from_seed(1);
        let u = random_unitary(5, &mut rng);
        assert!((&u * u.adjoint() - identity(5)).camax() < 1e-12);
    }

    #[test]
    fn random_povm_is_complete_and_positive() {
        let mut rng = rng_from_seed(2);
        let povm = random_povm(4, 3, &mut rng);
        assert!((sum(&povm, 4) - identity(4)).camax() < 1e-12);
        assert!(povm.iter().all(|m| is_psd(m, 1e-12)));
    }

    #[test]
    fn random_projective_is_projective_and_complete() {
        let mut rng = rng_from_seed(3);
        let proj = random_projective(4, 4, &mut rng);
        assert!((sum(&proj, 4) - identity(4)).camax() < 1e-12);
        assert!(proj.iter().all(|m| is_projector(m, 1e-12)));
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = rng_from_seed(4);
        let rho = random_density(4, 4, &mut rng);
        let s = psd_sqrt(&rho);
        assert!((&s * &s - &rho).camax() < 1e-12);
    }

    #[test]
    fn trace_norm_of_hermitian_matches_svd() {
        let mut rng = rng_from_seed(5);
        let a = random_density(4, 2, &mut rng) - random_density(4, 3, &mut rng);
        let svd: f64 = a.clone().svd(false, false).singular_values.iter().sum();
        assert!((trace_norm(&a) - svd).abs() < 1e-12);
    }

    #[test]
    fn contraction_has_norm_at_most_one() {
        let mut rng = rng_from_seed(6);
        for _ in 0..20 {
            assert!(operator_norm(&random_contraction(3, 5, &mut rng)) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn norms_of_rank_one_products_are_exact() {
        let mut rng = rng_from_seed(7);
        for (rows, cols) in [(3, 12), (12, 3), (3, 3)] {
            let a = ginibre(rows, 1, &mut rng);
            let b = ginibre(1, cols, &mut rng);
            let m = &a * &b;
            let exact = a.norm() * b.norm();
            assert!((operator_norm(&m) - exact).abs() < 1e-12);
            assert!((trace_norm(&m) - exact).abs() < 1e-12);
        }
    }
}
