//! Truncation-error metrics for propagation in an incomplete basis.
//!
//! Projecting a unitary does not commute with exponentiating a projected
//! Hamiltonian. The instantaneous norm loss N₁(t) = 1 − ‖P U_t P ψ̃‖²
//! measures what the projected-unitary (clock-style) step loses per step;
//! N₂(t) = ‖(H − PHP)ψ̃‖²·dt² is its perturbative estimate evaluated along
//! the norm-conserving projected-Hamiltonian (McLachlan-style) branch. The
//! comparison harness propagates both branches side by side against the
//! exact evolution.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{adjoint, matrix_exponential_unitary, C64, DenseHermitian, StateVector};

/// Fixed truncated subspace spanned by orthonormal columns; the projector
/// is P = BB†.
pub struct ProjectionSpace {
    basis: Array2<C64>,
}

impl ProjectionSpace {
    /// Columns must be orthonormal within 1e-10.
    pub fn new(basis: Array2<C64>) -> Result<Self> {
        let gram = adjoint(&basis).dot(&basis);
        let defect = crate::linalg::max_abs(&(&gram - &crate::linalg::identity(gram.nrows())));
        if defect > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "basis columns are not orthonormal (Gram defect {defect:.3e})"
            )));
        }
        Ok(Self { basis })
    }

    /// The full space: P = I.
    pub fn full(dim: usize) -> Self {
        Self {
            basis: crate::linalg::identity(dim),
        }
    }

    /// Excitation space built from an initial product state with the
    /// untransformed (t = 0) raising operators: the reference plus every
    /// flip of up to `max_flips` distinct sites.
    pub fn excitations_from_product(
        factors: &[Array1<C64>],
        max_flips: usize,
    ) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Empty("product factors"));
        }
        let f = factors.len();
        for fac in factors {
            if fac.len() != 2 {
                return Err(Error::NotProductState);
            }
            let norm = fac.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::NotProductState);
            }
        }
        let flipped: Vec<Array1<C64>> = factors
            .iter()
            .map(|fac| Array1::from_vec(vec![-fac[1].conj(), fac[0].conj()]))
            .collect();
        let mut masks: Vec<u32> = (0..(1u32 << f))
            .filter(|m| (m.count_ones() as usize) <= max_flips)
            .collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        let n = 1usize << f;
        let mut basis = Array2::zeros((n, masks.len()));
        for (c, &mask) in masks.iter().enumerate() {
            let parts: Vec<Array1<C64>> = (0..f)
                .map(|site| {
                    if (mask >> site) & 1 == 1 {
                        flipped[site].clone()
                    } else {
                        factors[site].clone()
                    }
                })
                .collect();
            let state = crate::spin::kron_state(&parts)?;
            basis.column_mut(c).assign(state.amplitudes());
        }
        Self::new(basis)
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// P x = B(B†x).
    pub fn project_vector(&self, x: &Array1<C64>) -> Array1<C64> {
        let coefficients = adjoint(&self.basis).dot(x);
        self.basis.dot(&coefficients)
    }

    /// P M P.
    pub fn project_matrix(&self, m: &Array2<C64>) -> Array2<C64> {
        let bm = adjoint(&self.basis).dot(&m.dot(&self.basis));
        self.basis.dot(&bm.dot(&adjoint(&self.basis)))
    }

    /// ‖Px − x‖.
    pub fn leakage(&self, x: &Array1<C64>) -> f64 {
        (&self.project_vector(x) - x)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn assert_in_space(p: &ProjectionSpace, psi: &StateVector) {
    assert_eq!(psi.dim(), p.dim(), "state dimension mismatch");
    assert!(
        psi.is_normalized(1e-8),
        "metric input must be normalized (norm = {})",
        psi.norm()
    );
    assert!(
        p.leakage(psi.amplitudes()) < 1e-8,
        "metric input must lie in the projection space"
    );
}

/// N₁(t) = 1 − ‖P U_t P ψ̃‖² for a normalized ψ̃ in the range of P.
pub fn norm_loss_instant(p: &ProjectionSpace, u: &Array2<C64>, psi: &StateVector) -> f64 {
    assert_in_space(p, psi);
    assert_eq!(u.nrows(), p.dim(), "unitary dimension mismatch");
    let stepped = p.project_vector(&u.dot(psi.amplitudes()));
    1.0 - stepped.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// N₂(t) = ‖(H − PHP)ψ̃‖²·dt², the perturbative estimate of the loss.
pub fn norm_loss_perturbative(
    p: &ProjectionSpace,
    h: &DenseHermitian,
    psi: &StateVector,
    dt: f64,
) -> f64 {
    assert_in_space(p, psi);
    assert_eq!(h.dim(), p.dim(), "Hamiltonian dimension mismatch");
    let hp = h.matrix().dot(psi.amplitudes());
    let php = p.project_vector(&hp);
    let escape: f64 = (&hp - &php).iter().map(|z| z.norm_sqr()).sum();
    escape * dt * dt
}

/// Side-by-side propagation in a fixed truncated space.
pub struct ComparisonRun {
    /// Projected-unitary branch with per-step renormalization.
    pub tedvp: Vec<StateVector>,
    /// Projected-Hamiltonian (exponential) branch; norm-conserving.
    pub mvp: Vec<StateVector>,
    /// Unprojected exact propagation of the same initial state.
    pub exact: Vec<StateVector>,
    /// N₁ evaluated on the projected-unitary branch before each step.
    pub n1: Vec<f64>,
    /// N₂ evaluated on the projected-Hamiltonian branch before each step.
    pub n2: Vec<f64>,
    /// ‖PUPψ‖ before renormalization at each step.
    pub tedvp_prenorm: Vec<f64>,
}

/// Propagates the two branches for a time-independent Hamiltonian: the
/// exact propagator is built once and projected (renormalizing each step),
/// the Hamiltonian is projected and exponentiated once. Long time steps
/// turn the first branch into a power iteration on PUP; its norm-loss
/// series then flattens.
pub fn compare_tedvp_mclachlan(
    p: &ProjectionSpace,
    h: &DenseHermitian,
    psi0: &StateVector,
    dt: f64,
    steps: usize,
) -> Result<ComparisonRun> {
    assert_in_space(p, psi0);
    if h.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: h.dim(),
        });
    }
    let u = matrix_exponential_unitary(h, dt)?;
    let pup = p.project_matrix(&u);
    let php = DenseHermitian::new(p.project_matrix(h.matrix()))?;
    let u_mvp = matrix_exponential_unitary(&php, dt)?;

    let mut run = ComparisonRun {
        tedvp: vec![psi0.clone()],
        mvp: vec![psi0.clone()],
        exact: vec![psi0.clone()],
        n1: Vec::with_capacity(steps),
        n2: Vec::with_capacity(steps),
        tedvp_prenorm: Vec::with_capacity(steps),
    };

    for _ in 0..steps {
        let current = run.tedvp.last().expect("seeded").clone();
        let stepped = pup.dot(current.amplitudes());
        let prenorm = stepped.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        run.n1.push(1.0 - prenorm * prenorm);
        run.tedvp_prenorm.push(prenorm);
        if prenorm < 1e-300 {
            return Err(Error::VanishingSlice);
        }
        run.tedvp
            .push(StateVector::new(stepped.mapv(|z| z / prenorm))?);

        let current_m = run.mvp.last().expect("seeded").clone();
        run.n2.push(norm_loss_perturbative(p, h, &current_m, dt));
        run.mvp
            .push(StateVector::new(u_mvp.dot(current_m.amplitudes()))?);

        let current_e = run.exact.last().expect("seeded").clone();
        run.exact
            .push(StateVector::new(u.dot(current_e.amplitudes()))?);
    }
    Ok(run)
}

/// Indices of strict local maxima rising above 10× the series median.
pub fn peak_indices(series: &[f64]) -> Vec<usize> {
    if series.len() < 3 {
        return Vec::new();
    }
    let mut sorted: Vec<f64> = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 0 {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    } else {
        sorted[sorted.len() / 2]
    };
    let threshold = 10.0 * median;
    (1..series.len() - 1)
        .filter(|&i| {
            series[i] > series[i - 1] && series[i] > series[i + 1] && series[i] > threshold
        })
        .collect()
}

/// Max-over-time distance between two state trajectories.
pub fn max_state_gap(a: &[StateVector], b: &[StateVector]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            x.amplitudes()
                .iter()
                .zip(y.amplitudes().iter())
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}
