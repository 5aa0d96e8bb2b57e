//! Shared test oracles, independent of the library's solver paths.

#![allow(dead_code)]

use clockdyn::linalg::{adjoint, identity, max_abs, C64};
use clockdyn::StateVector;
use ndarray::{Array1, Array2};

/// Cyclic Jacobi eigensolver for complex Hermitian matrices. Written as an
/// independent cross-check for the LAPACK-backed solver; O(n³) per sweep
/// and deliberately simple.
pub fn jacobi_eig(a: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut v: Array2<C64> = identity(n);
    let scale = max_abs(a).max(1e-300);

    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[[p, q]].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let z = m[[p, q]];
                let r = z.norm();
                if r <= 1e-18 * scale {
                    continue;
                }
                let phase = z / r;
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let theta = 0.5 * (2.0 * r).atan2(app - aqq);
                let (s, c) = theta.sin_cos();
                // J = diag(e^{iφ/2}, e^{−iφ/2})·[[c, −s],[s, c]] on the
                // (p, q) plane diagonalizes the block.
                let half = phase.sqrt();
                let jpp = half * c;
                let jpq = half * (-s);
                let jqp = half.conj() * s;
                let jqq = half.conj() * c;
                // m ← J† m J
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = mkp * jpp + mkq * jqp;
                    m[[k, q]] = mkp * jpq + mkq * jqq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = jpp.conj() * mpk + jqp.conj() * mqk;
                    m[[q, k]] = jpq.conj() * mpk + jqq.conj() * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = vkp * jpp + vkq * jqp;
                    v[[k, q]] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    (values, vectors)
}

/// ‖A − VΛV†‖_max, the self-consistency check the Jacobi oracle must pass
/// before it may judge anything else.
pub fn reconstruction_defect(a: &Array2<C64>, values: &[f64], vectors: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut lambda: Array2<C64> = Array2::zeros((n, n));
    for (i, &v) in values.iter().enumerate() {
        lambda[[i, i]] = C64::new(v, 0.0);
    }
    let rebuilt = vectors.dot(&lambda).dot(&adjoint(vectors));
    max_abs(&(a - &rebuilt))
}

/// Matrix exponential by truncated Taylor series with scaling and squaring;
/// the independent oracle for the eigendecomposition-based unitary
/// exponential.
pub fn expm_taylor(m: &Array2<C64>) -> Array2<C64> {
    let n = m.nrows();
    let norm: f64 = (0..n)
        .map(|j| (0..n).map(|i| m[[i, j]].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.mapv(|z| z / 2f64.powi(squarings as i32));
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..200 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
        if max_abs(&term) < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

pub fn state_gap(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes().iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn vec_gap(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
