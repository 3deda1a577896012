//! Multi-register pure states and density matrices.
//!
//! A state on `r` registers of local dimension `d` is stored as a vector of
//! length `d^r`; register 0 is the most significant digit of the index.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::QuantumError;
use crate::linalg::{self, c, CMatrix, IDENTITY_TOL};

/// Largest joint dimension `d^r` handled by dense routines.
pub const MAX_JOINT_DIM: usize = 4096;

fn joint_dim(d: usize, r: usize) -> Result<usize, QuantumError> {
    let mut total = 1usize;
    for _ in 0..r {
        total = total.checked_mul(d).ok_or(QuantumError::TooLarge(usize::MAX))?;
        if total > MAX_JOINT_DIM {
            return Err(QuantumError::TooLarge(total));
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    d: usize,
    r: usize,
    amps: DVector<Complex64>,
}

impl StateVector {
    pub fn new(d: usize, r: usize, amps: Vec<Complex64>) -> Result<Self, QuantumError> {
        let dim = joint_dim(d, r)?;
        if amps.len() != dim {
            return Err(QuantumError::DimensionMismatch {
                expected: dim,
                got: amps.len(),
            });
        }
        let amps = DVector::from_vec(amps);
        let norm = amps.norm();
        if (norm - 1.0).abs() > IDENTITY_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(StateVector { d, r, amps })
    }

    /// Normalizes `amps` before validating.
    pub fn normalized(d: usize, r: usize, amps: Vec<Complex64>) -> Result<Self, QuantumError> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(QuantumError::NotNormalized(0.0));
        }
        StateVector::new(d, r, amps.into_iter().map(|a| a / norm).collect())
    }

    /// `Σ_s √w_s |s⟩^{⊗r}` for nonnegative weights summing to 1.
    pub fn maximally_correlated(weights: &[f64], r: usize) -> Result<Self, QuantumError> {
        let d = weights.len();
        let dim = joint_dim(d, r)?;
        let mut amps = vec![c(0.0); dim];
        for (s, &w) in weights.iter().enumerate() {
            let idx = (0..r).fold(0, |acc, _| acc * d + s);
            amps[idx] = c(w.max(0.0).sqrt());
        }
        StateVector::new(d, r, amps)
    }

    /// `|v⟩^{⊗r}` for a unit vector `v`.
    pub fn product(local: &[Complex64], r: usize) -> Result<Self, QuantumError> {
        let d = local.len();
        let dim = joint_dim(d, r)?;
        let amps = (0..dim)
            .map(|mut idx| {
                let mut a = c(1.0);
                for _ in 0..r {
                    a *= local[idx % d];
                    idx /= d;
                }
                a
            })
            .collect();
        StateVector::normalized(d, r, amps)
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn registers(&self) -> usize {
        self.r
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    fn stride(&self, register: usize) -> usize {
        self.d.pow((self.r - 1 - register) as u32)
    }

    fn check_op(&self, op: &CMatrix, register: usize) -> Result<(), QuantumError> {
        if register >= self.r {
            return Err(QuantumError::DimensionMismatch {
                expected: self.r,
                got: register + 1,
            });
        }
        if op.nrows() != self.d || op.ncols() != self.d {
            return Err(QuantumError::DimensionMismatch {
                expected: self.d,
                got: op.nrows(),
            });
        }
        Ok(())
    }

    /// `(Id ⊗ … ⊗ op ⊗ … ⊗ Id)` applied to an arbitrary vector of this shape.
    pub fn apply_local_to(&self, v: &DVector<Complex64>, op: &CMatrix, register: usize) -> Result<DVector<Complex64>, QuantumError> {
        self.check_op(op, register)?;
        Ok(apply_local(v, self.d, self.stride(register), op))
    }

    /// `⟨Ψ| ops[0] ⊗ … ⊗ ops[r-1] |Ψ⟩`, where `None` stands for the identity.
    pub fn expectation(&self, ops: &[Option<&CMatrix>]) -> Result<Complex64, QuantumError> {
        if ops.len() != self.r {
            return Err(QuantumError::DimensionMismatch {
                expected: self.r,
                got: ops.len(),
            });
        }
        let mut v = self.amps.clone();
        for (register, op) in ops.iter().enumerate() {
            if let Some(op) = op {
                v = self.apply_local_to(&v, op, register)?;
            }
        }
        Ok(self.amps.dotc(&v))
    }

    /// State whose register `i` holds register `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, QuantumError> {
        if perm.len() != self.r {
            return Err(QuantumError::DimensionMismatch {
                expected: self.r,
                got: perm.len(),
            });
        }
        let mut amps = vec![c(0.0); self.amps.len()];
        for (idx, slot) in amps.iter_mut().enumerate() {
            let digits = self.digits(idx);
            // Digit i of the new index sits at register perm[i] of the old one.
            let mut old = vec![0usize; self.r];
            for (i, &j) in perm.iter().enumerate() {
                old[j] = digits[i];
            }
            *slot = self.amps[self.index(&old)];
        }
        Ok(StateVector {
            d: self.d,
            r: self.r,
            amps: DVector::from_vec(amps),
        })
    }

    fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.r];
        for slot in out.iter_mut().rev() {
            *slot = idx % self.d;
            idx /= self.d;
        }
        out
    }

    fn index(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &s| acc * self.d + s)
    }

    /// Largest distance `‖Ψ − swap_{i,i+1} Ψ‖` over adjacent transpositions,
    /// which generate all register permutations.
    pub fn permutation_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.r.saturating_sub(1) {
            let mut perm: Vec<usize> = (0..self.r).collect();
            perm.swap(i, i + 1);
            let swapped = self.permuted(&perm).expect("valid permutation");
            worst = worst.max((&self.amps - &swapped.amps).norm());
        }
        worst
    }

    pub fn is_permutation_invariant(&self, tol: f64) -> bool {
        self.permutation_defect() <= tol
    }

    pub fn density(&self) -> DensityMatrix {
        let mat = &self.amps * self.amps.adjoint();
        DensityMatrix {
            d: self.d,
            r: self.r,
            mat,
        }
    }

    /// Reduced density matrix on `keep` (in the given order), computed
    /// directly from the amplitudes.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix, QuantumError> {
        if keep.iter().any(|&k| k >= self.r) {
            return Err(QuantumError::DimensionMismatch {
                expected: self.r,
                got: keep.iter().max().copied().unwrap_or(0) + 1,
            });
        }
        let traced: Vec<usize> = (0..self.r).filter(|i| !keep.contains(i)).collect();
        let kd = self.d.pow(keep.len() as u32);
        let td = self.d.pow(traced.len() as u32);
        // Reshape amplitudes into a kd × td matrix M so that ρ = M M†.
        let mut m = CMatrix::zeros(kd, td);
        for idx in 0..self.amps.len() {
            let digits = self.digits(idx);
            let row = keep.iter().fold(0, |acc, &j| acc * self.d + digits[j]);
            let col = traced.iter().fold(0, |acc, &j| acc * self.d + digits[j]);
            m[(row, col)] = self.amps[idx];
        }
        Ok(DensityMatrix {
            d: self.d,
            r: keep.len(),
            mat: &m * m.adjoint(),
        })
    }
}

/// Applies `op` to the digit of stride `stride` of every index.
pub(crate) fn apply_local(v: &DVector<Complex64>, d: usize, stride: usize, op: &CMatrix) -> DVector<Complex64> {
    let mut out = DVector::zeros(v.len());
    let block = stride * d;
    for base in (0..v.len()).step_by(block) {
        for low in 0..stride {
            for s in 0..d {
                let mut acc = c(0.0);
                for t in 0..d {
                    let e = op[(s, t)];
                    if e != c(0.0) {
                        acc += e * v[base + t * stride + low];
                    }
                }
                out[base + s * stride + low] = acc;
            }
        }
    }
    out
}

/// Hermitian, positive semidefinite, unit-trace matrix on `r` registers of
/// dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    d: usize,
    r: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(d: usize, r: usize, mat: CMatrix) -> Result<Self, QuantumError> {
        let dim = joint_dim(d, r)?;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(QuantumError::DimensionMismatch {
                expected: dim,
                got: mat.nrows(),
            });
        }
        if !linalg::is_hermitian(&mat, IDENTITY_TOL) {
            return Err(QuantumError::NotDensity("not Hermitian".into()));
        }
        let t = mat.trace();
        if (t.re - 1.0).abs() > IDENTITY_TOL || t.im.abs() > IDENTITY_TOL {
            return Err(QuantumError::NotDensity(format!("trace {t}")));
        }
        let low = linalg::min_eigenvalue(&mat);
        if low < -IDENTITY_TOL {
            return Err(QuantumError::NotDensity(format!("eigenvalue {low:.3e}")));
        }
        Ok(DensityMatrix { d, r, mat })
    }

    /// Single-register density matrix.
    pub fn single(mat: CMatrix) -> Result<Self, QuantumError> {
        let d = mat.nrows();
        DensityMatrix::new(d, 1, mat)
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn registers(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Partial trace keeping `keep` (in the given order).
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix, QuantumError> {
        Ok(DensityMatrix {
            d: self.d,
            r: keep.len(),
            mat: partial_trace(&self.mat, self.d, self.r, keep)?,
        })
    }

    /// `(ρ + SρS)/2` for the swap `S` of two registers; used to build
    /// swap-symmetric two-register states.
    pub fn swap_symmetrized(&self) -> Result<DensityMatrix, QuantumError> {
        if self.r != 2 {
            return Err(QuantumError::DimensionMismatch { expected: 2, got: self.r });
        }
        let d = self.d;
        let swapped = CMatrix::from_fn(d * d, d * d, |i, j| {
            let (i1, i2) = (i / d, i % d);
            let (j1, j2) = (j / d, j % d);
            self.mat[(i2 * d + i1, j2 * d + j1)]
        });
        Ok(DensityMatrix {
            d,
            r: 2,
            mat: (&self.mat + swapped) * c(0.5),
        })
    }
}

/// Partial trace of an operator on `r` registers of dimension `d`, keeping
/// `keep` in the given order.
pub fn partial_trace(mat: &CMatrix, d: usize, r: usize, keep: &[usize]) -> Result<CMatrix, QuantumError> {
    let dim = joint_dim(d, r)?;
    if mat.nrows() != dim || mat.ncols() != dim {
        return Err(QuantumError::DimensionMismatch {
            expected: dim,
            got: mat.nrows(),
        });
    }
    if keep.iter().any(|&k| k >= r) {
        return Err(QuantumError::DimensionMismatch { expected: r, got: r + 1 });
    }
    let traced: Vec<usize> = (0..r).filter(|i| !keep.contains(i)).collect();
    let kd = d.pow(keep.len() as u32);
    let td = d.pow(traced.len() as u32);
    let compose = |kept: usize, tr: usize| {
        let mut digits = vec![0usize; r];
        let mut k = kept;
        for &j in keep.iter().rev() {
            digits[j] = k % d;
            k /= d;
        }
        let mut t = tr;
        for &j in traced.iter().rev() {
            digits[j] = t % d;
            t /= d;
        }
        digits.iter().fold(0, |acc, &s| acc * d + s)
    };
    let mut out = CMatrix::zeros(kd, kd);
    for i in 0..kd {
        for j in 0..kd {
            let mut acc = c(0.0);
            for t in 0..td {
                acc += mat[(compose(i, t), compose(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

fn check_square(a: &CMatrix, dim: usize) -> Result<(), QuantumError> {
    if a.nrows() != dim || a.ncols() != dim {
        return Err(QuantumError::DimensionMismatch {
            expected: dim,
            got: a.nrows(),
        });
    }
    Ok(())
}

/// `Tr(A ρ)`.
pub fn trace_rho(a: &CMatrix, rho: &DensityMatrix) -> Result<Complex64, QuantumError> {
    check_square(a, rho.dim())?;
    Ok((a * &rho.mat).trace())
}

/// `‖A‖_ρ = Tr(A A† ρ)^{1/2}`.
pub fn rho_norm(a: &CMatrix, rho: &DensityMatrix) -> Result<f64, QuantumError> {
    check_square(a, rho.dim())?;
    Ok(rho_norm_sq_unchecked(a, &rho.mat).sqrt())
}

pub(crate) fn rho_norm_sq_unchecked(a: &CMatrix, rho: &CMatrix) -> f64 {
    (a * a.adjoint() * rho).trace().re.max(0.0)
}

/// `Tr((A ⊗ B) ρ)` for a two-register `ρ`, without forming the product.
pub fn trace_rho_pair(a: &CMatrix, b: &CMatrix, rho: &DensityMatrix) -> Result<Complex64, QuantumError> {
    if rho.r != 2 {
        return Err(QuantumError::DimensionMismatch { expected: 2, got: rho.r });
    }
    check_square(a, rho.d)?;
    check_square(b, rho.d)?;
    Ok(trace_pair_unchecked(a, b, &rho.mat, rho.d))
}

pub(crate) fn trace_pair_unchecked(a: &CMatrix, b: &CMatrix, rho: &CMatrix, d: usize) -> Complex64 {
    // Tr((A⊗B)ρ) = Σ A[i,j] B[k,l] ρ[(j,l),(i,k)]
    let mut acc = c(0.0);
    for i in 0..d {
        for j in 0..d {
            let aij = a[(i, j)];
            if aij == c(0.0) {
                continue;
            }
            for k in 0..d {
                for l in 0..d {
                    acc += aij * b[(k, l)] * rho[(j * d + l, i * d + k)];
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, random_density, random_unitary};
    use mipstar::rng::rng_from_seed;

    fn random_state(d: usize, r: usize, seed: u64) -> StateVector {
        let mut rng = rng_from_seed(seed);
        let g = linalg::ginibre(d.pow(r as u32), 1, &mut rng);
        StateVector::normalized(d, r, g.iter().copied().collect()).unwrap()
    }

    #[test]
    fn expectation_matches_kronecker_product() {
        let psi = random_state(2, 3, 1);
        let mut rng = rng_from_seed(9);
        let a = random_unitary(2, &mut rng);
        let b = random_density(2, 2, &mut rng);
        let full = kron(&kron(&a, &linalg::identity(2)), &b);
        let direct = psi.amplitudes().dotc(&(&full * psi.amplitudes()));
        let fast = psi.expectation(&[Some(&a), None, Some(&b)]).unwrap();
        assert!((direct - fast).norm() < 1e-12);
    }

    #[test]
    fn reduced_state_matches_partial_trace() {
        let psi = random_state(3, 3, 2);
        let via_amps = psi.reduced(&[2, 0]).unwrap();
        let via_density = psi.density().reduced(&[2, 0]).unwrap();
        assert!((via_amps.matrix() - via_density.matrix()).camax() < 1e-12);
        assert!((via_amps.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximally_correlated_state_is_invariant() {
        let psi = StateVector::maximally_correlated(&[0.5, 0.25, 0.25], 3).unwrap();
        assert!(psi.is_permutation_invariant(1e-12));
        assert!(!random_state(2, 3, 3).is_permutation_invariant(1e-6));
    }

    #[test]
    fn permuted_moves_registers() {
        let psi = random_state(2, 3, 4);
        let moved = psi.permuted(&[2, 0, 1]).unwrap();
        let mut rng = rng_from_seed(5);
        let a = random_density(2, 2, &mut rng);
        // Operator on new register 0 acts on old register 2.
        let lhs = moved.expectation(&[Some(&a), None, None]).unwrap();
        let rhs = psi.expectation(&[None, None, Some(&a)]).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn rho_norm_matches_eigendecomposition() {
        let mut rng = rng_from_seed(6);
        let rho = DensityMatrix::single(random_density(4, 4, &mut rng)).unwrap();
        let a = linalg::ginibre(4, 4, &mut rng);
        // Independent path: Σ_k λ_k ‖A† v_k‖².
        let (values, vectors) = linalg::eigh(rho.matrix());
        let oracle: f64 = (0..4)
            .map(|k| values[k] * (a.adjoint() * vectors.column(k)).norm_squared())
            .sum();
        assert!((rho_norm(&a, &rho).unwrap().powi(2) - oracle).abs() < 1e-12);
        assert!((rho_norm(&linalg::identity(4), &rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_trace_matches_kronecker() {
        let mut rng = rng_from_seed(7);
        let rho = DensityMatrix::new(3, 2, random_density(9, 9, &mut rng)).unwrap();
        let a = linalg::ginibre(3, 3, &mut rng);
        let b = linalg::ginibre(3, 3, &mut rng);
        let direct = (kron(&a, &b) * rho.matrix()).trace();
        assert!((trace_rho_pair(&a, &b, &rho).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rho = DensityMatrix::single(linalg::identity(2) * c(0.5)).unwrap();
        assert!(matches!(
            trace_rho(&linalg::identity(3), &rho),
            Err(QuantumError::DimensionMismatch { .. })
        ));
    }
}
