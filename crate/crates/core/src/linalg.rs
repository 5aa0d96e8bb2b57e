//! Complex vector/matrix kernel: state containers, inner products, dense
//! Hermitian eigensolves and unitary exponentials, plus the linear-operator
//! contract the rest of the crate builds on.
//!
//! Complex numbers are pairs of 64-bit floats throughout; every tolerance in
//! the crate sits comfortably above double-precision noise.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayViewMut1};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub mod sample;

/// Complex amplitude vector of a physical system at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty("state vector"));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_vec(amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(Array1::from_vec(amplitudes))
    }

    /// Computational basis state |index⟩ in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = Array1::zeros(dim);
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn view(&self) -> ArrayView1<'_, C64> {
        self.amplitudes.view()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Conjugate-linear in `self`: ⟨self|other⟩ = Σ conj(self_i)·other_i.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(inner(self.view(), other.view()))
    }

    /// Returns a unit-norm copy, or an error when the norm vanishes.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::VanishingSlice);
        }
        Ok(Self {
            amplitudes: self.amplitudes.mapv(|z| z / n),
        })
    }

    /// Rotates the global phase so the largest-magnitude amplitude is real
    /// and positive. Ties resolve to the first maximal index.
    pub fn phase_fixed(&self) -> Self {
        let mut best = 0usize;
        let mut best_mag = 0.0f64;
        for (i, z) in self.amplitudes.iter().enumerate() {
            let m = z.norm();
            if m > best_mag {
                best_mag = m;
                best = i;
            }
        }
        if best_mag < 1e-300 {
            return self.clone();
        }
        let phase = self.amplitudes[best] / best_mag;
        let rot = phase.conj();
        Self {
            amplitudes: self.amplitudes.mapv(|z| z * rot),
        }
    }

    /// |⟨self|other⟩| — global-phase-free overlap of unit vectors.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }
}

/// Composite system-time vector addressing T slices of dimension N as a flat
/// length-N·T vector; slice t occupies the contiguous block t (time-major).
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryState {
    data: Array1<C64>,
    system_dim: usize,
    steps: usize,
}

impl HistoryState {
    pub fn new(data: Array1<C64>, system_dim: usize) -> Result<Self> {
        if system_dim == 0 || data.is_empty() {
            return Err(Error::Empty("history state"));
        }
        if data.len() % system_dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: system_dim,
                got: data.len(),
            });
        }
        let steps = data.len() / system_dim;
        Ok(Self {
            data,
            system_dim,
            steps,
        })
    }

    pub fn zeros(system_dim: usize, steps: usize) -> Self {
        Self {
            data: Array1::zeros(system_dim * steps),
            system_dim,
            steps,
        }
    }

    /// Plain block stack of equally sized slices; no weighting is applied.
    pub fn stack(slices: &[StateVector]) -> Result<Self> {
        let first = slices.first().ok_or(Error::Empty("slice list"))?;
        let n = first.dim();
        let mut data = Array1::zeros(n * slices.len());
        for (t, s) in slices.iter().enumerate() {
            if s.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.dim(),
                });
            }
            data.slice_mut(s![t * n..(t + 1) * n]).assign(s.amplitudes());
        }
        Self::new(data, n)
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &Array1<C64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array1<C64> {
        &mut self.data
    }

    pub fn slice(&self, t: usize) -> ArrayView1<'_, C64> {
        let n = self.system_dim;
        self.data.slice(s![t * n..(t + 1) * n])
    }

    pub fn slice_mut(&mut self, t: usize) -> ArrayViewMut1<'_, C64> {
        let n = self.system_dim;
        self.data.slice_mut(s![t * n..(t + 1) * n])
    }

    /// Copy of block t as a state vector, without any rescaling.
    pub fn slice_state(&self, t: usize) -> StateVector {
        StateVector {
            amplitudes: self.slice(t).to_owned(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(inner(self.data.view(), other.data.view()))
    }
}

/// ⟨x|y⟩ = Σ conj(x_i)·y_i. Conjugate-linear in the first argument.
pub fn inner(x: ArrayView1<'_, C64>, y: ArrayView1<'_, C64>) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Conjugate transpose.
pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            let mut block = out.slice_mut(s![i * rb..(i + 1) * rb, j * cb..(j + 1) * cb]);
            block.assign(&b.mapv(|z| aij * z));
        }
    }
    out
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::eye(n)
}

/// Largest absolute entry; the max-norm used by the unitarity checks.
pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// ‖U†U − I‖_max.
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let d = adjoint(u).dot(u) - identity(u.nrows());
    max_abs(&d)
}

/// Least-squares slope of ln(y) against ln(x).
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Action of a Hermitian operator, dense or matrix-free.
pub trait HermitianOp: Sync {
    fn dim(&self) -> usize;

    fn apply_into(&self, x: ArrayView1<'_, C64>, out: ArrayViewMut1<'_, C64>);

    fn apply(&self, x: &Array1<C64>) -> Array1<C64> {
        let mut out = Array1::zeros(self.dim());
        self.apply_into(x.view(), out.view_mut());
        out
    }

    /// Dense materialization by application to the computational basis.
    fn materialize(&self) -> Array2<C64> {
        let d = self.dim();
        let mut m = Array2::zeros((d, d));
        let mut e = Array1::zeros(d);
        for j in 0..d {
            e[j] = C64::new(1.0, 0.0);
            let col = self.apply(&e);
            m.slice_mut(s![.., j]).assign(&col);
            e[j] = C64::new(0.0, 0.0);
        }
        m
    }
}

/// Dense Hermitian matrix; the constructor rejects matrices whose
/// anti-Hermitian part exceeds 1e-10 relative to the largest entry.
#[derive(Clone, Debug)]
pub struct DenseHermitian {
    matrix: Array2<C64>,
}

impl DenseHermitian {
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let scale = max_abs(&matrix).max(1.0);
        let defect = max_abs(&(&matrix - &adjoint(&matrix)));
        if defect > 1e-10 * scale {
            return Err(Error::InvalidParameter(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }
}

impl HermitianOp for DenseHermitian {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply_into(&self, x: ArrayView1<'_, C64>, mut out: ArrayViewMut1<'_, C64>) {
        out.assign(&self.matrix.dot(&x));
    }

    fn materialize(&self) -> Array2<C64> {
        self.matrix.clone()
    }
}

/// Full spectrum of a dense Hermitian matrix, eigenvalues ascending and
/// eigenvectors in the corresponding columns of the returned matrix.
pub fn hermitian_eig_full(matrix: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    // The backend treats the row-major buffer as column-major and therefore
    // diagonalizes Aᵀ = conj(A); conjugating the returned vectors restores
    // the standard columns-are-eigenvectors convention.
    let work = matrix.as_standard_layout().into_owned();
    let (values, vectors) = work
        .eigh(UPLO::Lower)
        .map_err(|e| Error::EigBackend(e.to_string()))?;
    Ok((values, vectors.mapv(|z| z.conj())))
}

/// The k smallest eigenpairs of a Hermitian operator.
///
/// Matrix-free operators are materialized first; this engine is meant for
/// desk-scale dimensions. Residuals ‖Av − λv‖ are verified against
/// 1e-9·‖A‖ and a violation is reported as an error carrying the worst
/// residual.
pub fn hermitian_eig_lowest(op: &dyn HermitianOp, k: usize) -> Result<Vec<(f64, Array1<C64>)>> {
    let d = op.dim();
    if k == 0 || k > d {
        return Err(Error::TooManyEigenpairs {
            requested: k,
            dim: d,
        });
    }
    let m = op.materialize();
    let (values, vectors) = hermitian_eig_full(&m)?;
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tolerance = 1e-9 * scale.max(1e-300);
    let mut out = Vec::with_capacity(k);
    let mut worst = 0.0f64;
    for j in 0..k {
        let v = vectors.slice(s![.., j]).to_owned();
        let residual = (&m.dot(&v) - &v.mapv(|z| z * values[j]))
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(residual);
        out.push((values[j], v));
    }
    if worst > tolerance {
        return Err(Error::EigResidual {
            residual: worst,
            tolerance,
        });
    }
    Ok(out)
}

/// exp(−i H dt) through the eigendecomposition of H; exactly unitary up to
/// the orthonormality of the eigenvectors.
pub fn matrix_exponential_unitary(h: &DenseHermitian, dt: f64) -> Result<Array2<C64>> {
    let (values, vectors) = hermitian_eig_full(h.matrix())?;
    let mut scaled = vectors.clone();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let phase = C64::from_polar(1.0, -values[j] * dt);
        col.mapv_inplace(|z| z * phase);
    }
    Ok(scaled.dot(&adjoint(&vectors)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inner_unit_vector() {
        let x = StateVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(x.inner(&x).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn inner_orthogonal() {
        let x = StateVector::basis(2, 0);
        let y = StateVector::basis(2, 1);
        assert_eq!(x.inner(&y).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn inner_conjugates_first_argument() {
        let r = 1.0 / 2.0f64.sqrt();
        let x = StateVector::from_vec(vec![c(r, r), c(0.0, 0.0)]).unwrap();
        let y = StateVector::basis(2, 0);
        let got = x.inner(&y).unwrap();
        assert!((got - c(r, -r)).norm() < 1e-15);
    }

    #[test]
    fn inner_dimension_mismatch() {
        let x = StateVector::basis(2, 0);
        let y = StateVector::basis(3, 0);
        assert!(matches!(
            x.inner(&y),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eig_lowest_diagonal() {
        let m = Array2::from_diag(&Array1::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        let op = DenseHermitian::new(m).unwrap();
        let pairs = hermitian_eig_lowest(&op, 1).unwrap();
        assert!(pairs[0].0.abs() < 1e-14);
        assert!((pairs[0].1[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_lowest_two_step_clock_kernel() {
        // ½[[1,−1],[−1,1]]: eigenpairs (0, (1,1)/√2) and (1, (1,−1)/√2).
        let m = ndarray::array![
            [c(0.5, 0.0), c(-0.5, 0.0)],
            [c(-0.5, 0.0), c(0.5, 0.0)]
        ];
        let op = DenseHermitian::new(m).unwrap();
        let pairs = hermitian_eig_lowest(&op, 2).unwrap();
        assert!(pairs[0].0.abs() < 1e-14);
        assert!((pairs[1].0 - 1.0).abs() < 1e-14);
        let v0 = &pairs[0].1;
        assert!((v0[0].norm() - v0[1].norm()).abs() < 1e-12);
        let parallel = (v0[0] * v0[1].conj()).re;
        assert!(parallel > 0.0);
    }

    #[test]
    fn eig_too_many_pairs() {
        let op = DenseHermitian::new(identity(2)).unwrap();
        assert!(matches!(
            hermitian_eig_lowest(&op, 3),
            Err(Error::TooManyEigenpairs { .. })
        ));
    }

    #[test]
    fn expm_zero_is_identity() {
        let h = DenseHermitian::new(Array2::zeros((3, 3))).unwrap();
        let u = matrix_exponential_unitary(&h, 0.7).unwrap();
        assert!(max_abs(&(&u - &identity(3))) < 1e-14);
    }

    #[test]
    fn expm_pauli_z_half_turn() {
        let h = DenseHermitian::new(ndarray::array![
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(-1.0, 0.0)]
        ])
        .unwrap();
        let u = matrix_exponential_unitary(&h, std::f64::consts::PI).unwrap();
        assert!(max_abs(&(&u + &identity(2))) < 1e-12);
    }

    #[test]
    fn history_state_layout() {
        let a = StateVector::basis(2, 0);
        let b = StateVector::basis(2, 1);
        let h = HistoryState::stack(&[a, b]).unwrap();
        assert_eq!(h.steps(), 2);
        assert_eq!(h.system_dim(), 2);
        assert_eq!(h.slice(1)[1], c(1.0, 0.0));
        assert_eq!(h.slice(1)[0], c(0.0, 0.0));
    }

    #[test]
    fn phase_fixing_makes_leading_amplitude_positive() {
        let x = StateVector::from_vec(vec![c(0.0, -0.9), c(0.1, 0.0)]).unwrap();
        let fixed = x.phase_fixed();
        assert!(fixed.amplitudes()[0].im.abs() < 1e-15);
        assert!(fixed.amplitudes()[0].re > 0.0);
    }
}
