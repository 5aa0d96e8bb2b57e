//! Seeded random samples used by tests and the experiment driver. All
//! sampling goes through a counter-based ChaCha stream so runs are
//! reproducible from a single u64 seed.

use ndarray::{Array1, Array2};
use ndarray_linalg::QR;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{adjoint, C64, DenseHermitian, HistoryState, StateVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Unit-norm Gaussian vector: Haar-uniform on the sphere.
pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    loop {
        let v = Array1::from_shape_fn(dim, |_| complex_normal(rng));
        let s = StateVector::new(v).expect("dim >= 1");
        if let Ok(n) = s.normalized() {
            return n;
        }
    }
}

/// Haar-random single-spin state.
pub fn random_qubit(rng: &mut ChaCha8Rng) -> Array1<C64> {
    random_state(rng, 2).amplitudes().clone()
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> DenseHermitian {
    let g = Array2::from_shape_fn((dim, dim), |_| complex_normal(rng));
    let h = (&g + &adjoint(&g)).mapv(|z| 0.5 * z);
    DenseHermitian::new(h).expect("symmetrized matrix is Hermitian")
}

/// Haar-random unitary: QR of a Ginibre matrix with the R-diagonal phases
/// folded into Q.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Array2<C64> {
    let g = Array2::from_shape_fn((dim, dim), |_| complex_normal(rng));
    let (q, r) = g.qr().expect("QR of a Ginibre sample");
    let mut u = q;
    for (j, mut col) in u.columns_mut().into_iter().enumerate() {
        let d = r[[j, j]];
        let m = d.norm();
        let phase = if m > 0.0 { d / m } else { C64::new(1.0, 0.0) };
        col.mapv_inplace(|z| z * phase);
    }
    u
}

/// Gaussian history state with unit total norm.
pub fn random_history(rng: &mut ChaCha8Rng, system_dim: usize, steps: usize) -> HistoryState {
    let data = Array1::from_shape_fn(system_dim * steps, |_| complex_normal(rng));
    let mut h = HistoryState::new(data, system_dim).expect("dims >= 1");
    let n = h.norm();
    h.data_mut().mapv_inplace(|z| z / n);
    h
}
