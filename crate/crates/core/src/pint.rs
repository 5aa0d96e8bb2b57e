//! Parallel-in-time engine. The linear clock R is the Hermitian
//! positive-definite block-tridiagonal operator whose system RΦ = Λ has the
//! discrete trajectory as its unique solution; it is solved by conjugate
//! gradient, optionally preconditioned by an exact serial solve with a
//! coarse clock, and compared against the parareal predictor-corrector
//! baseline. Work is tracked in sweep-level counters from which the
//! paper-style speedup estimates are formed.

use ndarray::{Array1, ArrayView1, ArrayViewMut1};

use crate::error::{Error, Result};
use crate::linalg::{inner, C64, HermitianOp, HistoryState, StateVector};
use crate::propagators::PropagatorProvider;

/// Matrix-free block-tridiagonal operator with diagonal blocks
/// I, …, I, ½I and off-diagonal blocks −½U_t / −½U_t†.
pub struct LinearClock<'a> {
    provider: &'a dyn PropagatorProvider,
    workers: usize,
}

impl<'a> LinearClock<'a> {
    pub fn new(provider: &'a dyn PropagatorProvider) -> Result<Self> {
        if provider.steps() < 2 {
            return Err(Error::TooFewSteps(provider.steps()));
        }
        Ok(Self {
            provider,
            workers: 1,
        })
    }

    /// Number of threads the slice-parallel apply may use. Results are
    /// identical for any worker count; per-slice arithmetic order is fixed.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn steps(&self) -> usize {
        self.provider.steps()
    }

    pub fn system_dim(&self) -> usize {
        self.provider.dim()
    }

    pub fn total_dim(&self) -> usize {
        self.steps() * self.system_dim()
    }

    pub fn provider(&self) -> &dyn PropagatorProvider {
        self.provider
    }

    /// R·Φ. Slice outputs are independent and are computed in parallel
    /// across the worker pool:
    ///   row 0:    Φ_0 − ½U_0†Φ_1
    ///   row t:    Φ_t − ½U_{t−1}Φ_{t−1} − ½U_t†Φ_{t+1}
    ///   row T−1:  ½Φ_{T−1} − ½U_{T−2}Φ_{T−2}
    pub fn apply(&self, phi: &HistoryState) -> Result<HistoryState> {
        if phi.system_dim() != self.system_dim() || phi.steps() != self.steps() {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                got: phi.dim(),
            });
        }
        let n = self.system_dim();
        let t_steps = self.steps();
        let mut out = HistoryState::zeros(n, t_steps);
        {
            let data = out
                .data_mut()
                .as_slice_mut()
                .expect("freshly allocated history state is contiguous");
            let row_task = |t: usize, row: &mut [C64]| {
                self.fill_row(phi, t, row);
            };
            run_rows(data, n, t_steps, self.workers, &row_task);
        }
        Ok(out)
    }

    fn fill_row(&self, phi: &HistoryState, t: usize, row: &mut [C64]) {
        let n = self.system_dim();
        let t_steps = self.steps();
        let mut row_view = ArrayViewMut1::from(&mut *row);
        let mut scratch = Array1::zeros(n);
        let half = C64::new(0.5, 0.0);
        if t + 1 == t_steps {
            for (o, v) in row_view.iter_mut().zip(phi.slice(t).iter()) {
                *o = half * v;
            }
        } else {
            row_view.assign(&phi.slice(t));
        }
        if t > 0 {
            self.provider
                .apply_into(t - 1, phi.slice(t - 1), scratch.view_mut());
            for (o, v) in row_view.iter_mut().zip(scratch.iter()) {
                *o -= half * v;
            }
        }
        if t + 1 < t_steps {
            self.provider
                .apply_adjoint_into(t, phi.slice(t + 1), scratch.view_mut());
            for (o, v) in row_view.iter_mut().zip(scratch.iter()) {
                *o -= half * v;
            }
        }
    }
}

impl HermitianOp for LinearClock<'_> {
    fn dim(&self) -> usize {
        self.total_dim()
    }

    fn apply_into(&self, x: ArrayView1<'_, C64>, mut out: ArrayViewMut1<'_, C64>) {
        let phi = HistoryState::new(x.to_owned(), self.system_dim())
            .expect("dimension checked by caller");
        let result = self.apply(&phi).expect("dimensions already validated");
        out.assign(result.data());
    }
}

/// Chunks rows over a scoped worker pool; worker count never changes the
/// per-row arithmetic, only which thread runs it.
fn run_rows<F>(data: &mut [C64], block: usize, rows: usize, workers: usize, task: &F)
where
    F: Fn(usize, &mut [C64]) + Sync,
{
    if workers <= 1 || rows == 1 {
        for (t, row) in data.chunks_mut(block).enumerate() {
            task(t, row);
        }
        return;
    }
    let rows_per_worker = rows.div_ceil(workers);
    std::thread::scope(|scope| {
        for (chunk_index, chunk) in data.chunks_mut(rows_per_worker * block).enumerate() {
            scope.spawn(move || {
                for (j, row) in chunk.chunks_mut(block).enumerate() {
                    task(chunk_index * rows_per_worker + j, row);
                }
            });
        }
    });
}

/// |Λ⟩ = (½ψ₀, 0, …, 0): the right-hand side fixing the initial condition.
pub fn rhs_initial(psi0: &StateVector, t_steps: usize) -> Result<HistoryState> {
    if t_steps < 2 {
        return Err(Error::TooFewSteps(t_steps));
    }
    let deviation = (psi0.norm() - 1.0).abs();
    if deviation > 1e-10 {
        return Err(Error::NotNormalized { deviation });
    }
    let mut out = HistoryState::zeros(psi0.dim(), t_steps);
    let half = C64::new(0.5, 0.0);
    for (o, v) in out.slice_mut(0).iter_mut().zip(psi0.amplitudes().iter()) {
        *o = half * v;
    }
    Ok(out)
}

/// Sweep-level work counters: `fine` counts applications of the fine clock
/// R^f (one per full sweep over the slices), `coarse` counts serial solves
/// or sweeps with the coarse propagator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WorkCounters {
    pub fine: usize,
    pub coarse: usize,
}

impl WorkCounters {
    pub fn total(&self) -> usize {
        self.fine + self.coarse
    }
}

/// Exact solver for R^c x = b.
///
/// R^c is unitarily block-equivalent to A ⊗ I with A the real T×T
/// tridiagonal kernel (diagonal 1, …, 1, ½; off-diagonal −½), so the
/// Cholesky factor of A yields a block forward/backward substitution whose
/// pivots are scalars. Cost: exactly T−1 coarse applications and T−1
/// adjoint applications, all matrix-free.
pub struct CoarseSolver<'a> {
    provider: &'a dyn PropagatorProvider,
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl<'a> CoarseSolver<'a> {
    pub fn new(provider: &'a dyn PropagatorProvider) -> Result<Self> {
        let t_steps = provider.steps();
        if t_steps < 2 {
            return Err(Error::TooFewSteps(t_steps));
        }
        // Cholesky of A: A = L Lᵀ with L lower bidiagonal. A is positive
        // definite for every T ≥ 2, so the pivots stay real.
        let mut diag = vec![0.0; t_steps];
        let mut sub = vec![0.0; t_steps];
        diag[0] = 1.0;
        for t in 1..t_steps {
            sub[t] = -0.5 / diag[t - 1];
            let a_tt: f64 = if t + 1 == t_steps { 0.5 } else { 1.0 };
            diag[t] = (a_tt - sub[t] * sub[t]).sqrt();
        }
        Ok(Self {
            provider,
            diag,
            sub,
        })
    }

    pub fn steps(&self) -> usize {
        self.provider.steps()
    }

    /// Solves R^c x = b and counts one coarse solve.
    pub fn solve(&self, b: &HistoryState, counters: &mut WorkCounters) -> Result<HistoryState> {
        let n = self.provider.dim();
        let t_steps = self.steps();
        if b.system_dim() != n || b.steps() != t_steps {
            return Err(Error::DimensionMismatch {
                expected: n * t_steps,
                got: b.dim(),
            });
        }
        // Forward substitution with 𝓛 = W(L⊗I)W†, which is lower bidiagonal
        // with diagonal blocks d_t·I and subdiagonal blocks e_t·U_{t−1}.
        let mut y = HistoryState::zeros(n, t_steps);
        let mut scratch = Array1::zeros(n);
        for t in 0..t_steps {
            let mut row: Array1<C64> = b.slice(t).to_owned();
            if t > 0 {
                self.provider
                    .apply_into(t - 1, y.slice(t - 1), scratch.view_mut());
                let e = C64::new(self.sub[t], 0.0);
                for (r, v) in row.iter_mut().zip(scratch.iter()) {
                    *r -= e * v;
                }
            }
            let d = C64::new(1.0 / self.diag[t], 0.0);
            for (o, v) in y.slice_mut(t).iter_mut().zip(row.iter()) {
                *o = d * v;
            }
        }
        // Backward substitution with 𝓛†: superdiagonal blocks e_{t+1}·U_t†.
        let mut x = HistoryState::zeros(n, t_steps);
        for t in (0..t_steps).rev() {
            let mut row: Array1<C64> = y.slice(t).to_owned();
            if t + 1 < t_steps {
                self.provider
                    .apply_adjoint_into(t, x.slice(t + 1), scratch.view_mut());
                let e = C64::new(self.sub[t + 1], 0.0);
                for (r, v) in row.iter_mut().zip(scratch.iter()) {
                    *r -= e * v;
                }
            }
            let d = C64::new(1.0 / self.diag[t], 0.0);
            for (o, v) in x.slice_mut(t).iter_mut().zip(row.iter()) {
                *o = d * v;
            }
        }
        counters.coarse += 1;
        Ok(x)
    }
}

/// Standalone coarse solve; builds the scalar Cholesky factors on the fly.
pub fn coarse_solve(
    provider: &dyn PropagatorProvider,
    b: &HistoryState,
    counters: &mut WorkCounters,
) -> Result<HistoryState> {
    CoarseSolver::new(provider)?.solve(b, counters)
}

/// Outcome of a conjugate-gradient solve.
pub struct CgSolve {
    pub solution: HistoryState,
    pub counters: WorkCounters,
    /// Relative residual after each iteration, starting with the initial 1.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// (Preconditioned) conjugate gradient on RΦ = Λ, stopping at relative
/// residual ‖RΦ−Λ‖/‖Λ‖ ≤ tol. Every application of the fine clock counts
/// one fine sweep; every preconditioner call counts one coarse solve. The
/// iteration cap is 4T.
pub fn cg_solve(
    fine: &LinearClock<'_>,
    rhs: &HistoryState,
    tol: f64,
    preconditioner: Option<&CoarseSolver<'_>>,
) -> Result<CgSolve> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter(
            "conjugate gradient tolerance must be positive".into(),
        ));
    }
    if rhs.system_dim() != fine.system_dim() || rhs.steps() != fine.steps() {
        return Err(Error::DimensionMismatch {
            expected: fine.total_dim(),
            got: rhs.dim(),
        });
    }
    if let Some(pc) = preconditioner {
        if pc.steps() != fine.steps() || pc.provider.dim() != fine.system_dim() {
            return Err(Error::ProviderMismatch(
                "preconditioner block structure differs from the fine clock".into(),
            ));
        }
    }

    let mut counters = WorkCounters::default();
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Err(Error::Empty("right-hand side"));
    }

    // x₀ = 0, so r₀ = Λ without spending a fine application.
    let mut x = HistoryState::zeros(fine.system_dim(), fine.steps());
    let mut r = rhs.clone();
    let mut z = match preconditioner {
        Some(pc) => pc.solve(&r, &mut counters)?,
        None => r.clone(),
    };
    let mut p = z.clone();
    let mut rz = inner(r.data().view(), z.data().view()).re;
    let mut residuals = vec![1.0];
    let mut best = 1.0f64;
    let max_iterations = 4 * fine.steps();

    for iteration in 1..=max_iterations {
        let ap = fine.apply(&p)?;
        counters.fine += 1;
        let p_ap = inner(p.data().view(), ap.data().view()).re;
        let alpha = C64::new(rz / p_ap, 0.0);
        for (xi, pi) in x.data_mut().iter_mut().zip(p.data().iter()) {
            *xi += alpha * pi;
        }
        for (ri, api) in r.data_mut().iter_mut().zip(ap.data().iter()) {
            *ri -= alpha * api;
        }
        let relative = r.norm() / rhs_norm;
        residuals.push(relative);
        best = best.min(relative);
        if relative <= tol {
            return Ok(CgSolve {
                solution: x,
                counters,
                residuals,
                iterations: iteration,
            });
        }
        z = match preconditioner {
            Some(pc) => pc.solve(&r, &mut counters)?,
            None => r.clone(),
        };
        let rz_next = inner(r.data().view(), z.data().view()).re;
        let beta = C64::new(rz_next / rz, 0.0);
        for (pi, zi) in p.data_mut().iter_mut().zip(z.data().iter()) {
            *pi = zi + beta * *pi;
        }
        rz = rz_next;
    }

    Err(Error::CgIterationCap {
        max_iterations,
        best,
        history: residuals,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PararealStatus {
    Converged { iterations: usize },
    Diverged { iterations: usize },
}

pub struct PararealRun {
    pub trajectory: Vec<StateVector>,
    pub counters: WorkCounters,
    pub status: PararealStatus,
    /// Max-slice update norm after each corrector iteration.
    pub deltas: Vec<f64>,
    /// λ⁰ (serial coarse pass) followed by every corrector iterate.
    pub iterates: Vec<Vec<StateVector>>,
}

/// Parareal predictor-corrector:
/// λ_{t+1}^{k+1} = U^c λ_t^{k+1} + U^f λ_t^k − U^c λ_t^k.
///
/// The fine sweep runs in parallel over slices (one fine counter tick per
/// sweep); coarse sweeps are serial. Stops when the max-slice change drops
/// below `tol`, when the change grows for two consecutive iterations
/// (flagged diverged, counters preserved), or after T−1 iterations, by
/// which point the iteration reproduces the serial fine trajectory exactly.
pub fn parareal_solve(
    fine: &dyn PropagatorProvider,
    coarse: &dyn PropagatorProvider,
    psi0: &StateVector,
    tol: f64,
    workers: usize,
) -> Result<PararealRun> {
    if fine.steps() != coarse.steps() {
        return Err(Error::ProviderMismatch(format!(
            "fine has {} slices, coarse {}",
            fine.steps(),
            coarse.steps()
        )));
    }
    if fine.dim() != coarse.dim() {
        return Err(Error::ProviderMismatch(format!(
            "fine dimension {}, coarse {}",
            fine.dim(),
            coarse.dim()
        )));
    }
    if psi0.dim() != fine.dim() {
        return Err(Error::DimensionMismatch {
            expected: fine.dim(),
            got: psi0.dim(),
        });
    }
    if tol <= 0.0 {
        return Err(Error::InvalidParameter(
            "parareal tolerance must be positive".into(),
        ));
    }

    let n = fine.dim();
    let t_steps = fine.steps();
    let mut counters = WorkCounters::default();

    // λ⁰: serial coarse propagation.
    let mut current: Vec<StateVector> = Vec::with_capacity(t_steps);
    current.push(psi0.clone());
    for t in 0..t_steps - 1 {
        let next = coarse.apply(t, &current[t]);
        current.push(next);
    }
    counters.coarse += 1;
    // The coarse values G(λ_t^k) feeding the corrector.
    let mut coarse_old: Vec<StateVector> = current[..t_steps - 1]
        .iter()
        .enumerate()
        .map(|(t, s)| coarse.apply(t, s))
        .collect();

    let mut iterates = vec![current.clone()];
    let mut deltas = Vec::new();
    let mut growth = 0usize;
    let mut status = PararealStatus::Converged {
        iterations: t_steps - 1,
    };

    for iteration in 1..t_steps {
        // Parallel fine sweep over the previous iterate.
        let mut fine_flat = HistoryState::zeros(n, t_steps - 1);
        {
            let data = fine_flat
                .data_mut()
                .as_slice_mut()
                .expect("contiguous buffer");
            let source = &current;
            let task = |t: usize, row: &mut [C64]| {
                let mut view = ArrayViewMut1::from(&mut *row);
                fine.apply_into(t, source[t].view(), view.view_mut());
            };
            run_rows(data, n, t_steps - 1, workers, &task);
        }
        counters.fine += 1;

        // Serial coarse sweep building the corrected iterate.
        let mut next: Vec<StateVector> = Vec::with_capacity(t_steps);
        next.push(psi0.clone());
        let mut coarse_new: Vec<StateVector> = Vec::with_capacity(t_steps - 1);
        for t in 0..t_steps - 1 {
            let predictor = coarse.apply(t, &next[t]);
            let fine_term = fine_flat.slice_state(t);
            let mut amplitudes = predictor.amplitudes().clone();
            amplitudes
                .iter_mut()
                .zip(fine_term.amplitudes().iter())
                .zip(coarse_old[t].amplitudes().iter())
                .for_each(|((a, f), c)| *a += f - c);
            next.push(StateVector::new(amplitudes)?);
            coarse_new.push(predictor);
        }
        counters.coarse += 1;

        let delta = current
            .iter()
            .zip(next.iter())
            .map(|(a, b)| {
                a.amplitudes()
                    .iter()
                    .zip(b.amplitudes().iter())
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        deltas.push(delta);
        current = next;
        coarse_old = coarse_new;
        iterates.push(current.clone());

        if delta <= tol {
            status = PararealStatus::Converged {
                iterations: iteration,
            };
            break;
        }
        if deltas.len() >= 2 && delta > deltas[deltas.len() - 2] {
            growth += 1;
            if growth >= 2 {
                status = PararealStatus::Diverged {
                    iterations: iteration,
                };
                break;
            }
        } else {
            growth = 0;
        }
    }

    Ok(PararealRun {
        trajectory: current,
        counters,
        status,
        deltas,
        iterates,
    })
}

/// S_clock = T / (2(N_f + N_c)); the factor 2 accounts for the backward
/// evolutions absent from a plain propagation.
pub fn speedup_clock(counters: &WorkCounters, t_steps: usize) -> Result<f64> {
    if counters.total() == 0 {
        return Err(Error::EmptyCounters);
    }
    Ok(t_steps as f64 / (2.0 * counters.total() as f64))
}

/// S_para = T / (N_f + N_c).
pub fn speedup_parareal(counters: &WorkCounters, t_steps: usize) -> Result<f64> {
    if counters.total() == 0 {
        return Err(Error::EmptyCounters);
    }
    Ok(t_steps as f64 / counters.total() as f64)
}
