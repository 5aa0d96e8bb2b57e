//! Concrete single-step propagators U_t and the provider contract that feeds
//! the clock constructions: dense exponentials, the enforced time-reversal
//! symmetry (ETRS) propagator for spin models, and the matrix-free
//! split-operator Fourier transform (SOFT) propagator for the Morse
//! oscillator.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{matrix_exponential_unitary, C64, DenseHermitian, StateVector};

/// 1 Å in bohr.
pub const ANGSTROM_TO_BOHR: f64 = 1.889_725_988_6;

/// Supplier of the action of U_t and U_t† on a state, for the links
/// t = 0 … T−2 of a T-slice discretization.
///
/// Implementations are immutable after construction and callable from many
/// threads at once; matrix-free implementations allocate their own scratch
/// per call.
pub trait PropagatorProvider: Sync {
    /// Number of time slices T; valid link indices are 0..T−1.
    fn steps(&self) -> usize;

    /// Dimension N of the physical system.
    fn dim(&self) -> usize;

    fn apply_into(&self, t: usize, x: ArrayView1<'_, C64>, out: ArrayViewMut1<'_, C64>);

    fn apply_adjoint_into(&self, t: usize, x: ArrayView1<'_, C64>, out: ArrayViewMut1<'_, C64>);

    fn apply(&self, t: usize, x: &StateVector) -> StateVector {
        let mut out = Array1::zeros(self.dim());
        self.apply_into(t, x.view(), out.view_mut());
        StateVector::new(out).expect("provider dimension >= 1")
    }

    fn apply_adjoint(&self, t: usize, x: &StateVector) -> StateVector {
        let mut out = Array1::zeros(self.dim());
        self.apply_adjoint_into(t, x.view(), out.view_mut());
        StateVector::new(out).expect("provider dimension >= 1")
    }

    /// Dense N×N matrix of U_t, materialized column by column when no
    /// cheaper route exists.
    fn dense(&self, t: usize) -> Array2<C64> {
        let n = self.dim();
        let mut m = Array2::zeros((n, n));
        let mut e = Array1::zeros(n);
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            self.apply_into(t, e.view(), m.column_mut(j));
            e[j] = C64::new(0.0, 0.0);
        }
        m
    }
}

/// Explicit per-link unitary matrices.
pub struct DensePropagators {
    unitaries: Vec<Array2<C64>>,
    adjoints: Vec<Array2<C64>>,
    dim: usize,
}

impl DensePropagators {
    /// T−1 link unitaries for a T-slice problem.
    pub fn new(unitaries: Vec<Array2<C64>>) -> Result<Self> {
        let first = unitaries.first().ok_or(Error::Empty("unitary list"))?;
        let dim = first.nrows();
        for u in &unitaries {
            if u.nrows() != dim || u.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: u.nrows(),
                });
            }
        }
        let adjoints = unitaries.iter().map(crate::linalg::adjoint).collect();
        Ok(Self {
            unitaries,
            adjoints,
            dim,
        })
    }

    /// The same unitary on every link.
    pub fn constant(u: Array2<C64>, t_steps: usize) -> Result<Self> {
        if t_steps < 2 {
            return Err(Error::TooFewSteps(t_steps));
        }
        Self::new(vec![u; t_steps - 1])
    }

    pub fn identity(dim: usize, t_steps: usize) -> Result<Self> {
        Self::constant(crate::linalg::identity(dim), t_steps)
    }

    /// ETRS propagators sampled from a time-dependent Hamiltonian on the
    /// uniform grid t·dt.
    pub fn from_etrs(
        hamiltonian: impl Fn(f64) -> DenseHermitian,
        dt: f64,
        t_steps: usize,
    ) -> Result<Self> {
        if t_steps < 2 {
            return Err(Error::TooFewSteps(t_steps));
        }
        let mut unitaries = Vec::with_capacity(t_steps - 1);
        let mut h_here = hamiltonian(0.0);
        for t in 0..t_steps - 1 {
            let h_next = hamiltonian((t + 1) as f64 * dt);
            unitaries.push(etrs_step(&h_here, &h_next, dt)?);
            h_here = h_next;
        }
        Self::new(unitaries)
    }
}

impl PropagatorProvider for DensePropagators {
    fn steps(&self) -> usize {
        self.unitaries.len() + 1
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, t: usize, x: ArrayView1<'_, C64>, mut out: ArrayViewMut1<'_, C64>) {
        out.assign(&self.unitaries[t].dot(&x));
    }

    fn apply_adjoint_into(
        &self,
        t: usize,
        x: ArrayView1<'_, C64>,
        mut out: ArrayViewMut1<'_, C64>,
    ) {
        out.assign(&self.adjoints[t].dot(&x));
    }

    fn dense(&self, t: usize) -> Array2<C64> {
        self.unitaries[t].clone()
    }
}

/// Enforced time-reversal symmetry step
/// U_t = exp(−i dt/2 H(t+dt)) · exp(−i dt/2 H(t)).
pub fn etrs_step(h_t: &DenseHermitian, h_tdt: &DenseHermitian, dt: f64) -> Result<Array2<C64>> {
    if h_t.dim() != h_tdt.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_t.dim(),
            got: h_tdt.dim(),
        });
    }
    let late = matrix_exponential_unitary(h_tdt, dt / 2.0)?;
    let early = matrix_exponential_unitary(h_t, dt / 2.0)?;
    Ok(late.dot(&early))
}

/// Uniform position grid x_j = origin + j·spacing with a power-of-two point
/// count, as required by the radix-2 Fourier transforms.
#[derive(Clone, Debug)]
pub struct SpatialGrid {
    pub points: usize,
    pub origin: f64,
    pub spacing: f64,
}

impl SpatialGrid {
    pub fn new(points: usize, origin: f64, spacing: f64) -> Result<Self> {
        if !points.is_power_of_two() {
            return Err(Error::GridNotPowerOfTwo(points));
        }
        if spacing <= 0.0 {
            return Err(Error::InvalidParameter("grid spacing must be positive".into()));
        }
        Ok(Self {
            points,
            origin,
            spacing,
        })
    }

    pub fn x(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing
    }

    pub fn positions(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.points, |j| self.x(j))
    }

    /// Signed momenta of the standard FFT layout: p_j = 2πs_j/(N·Δx) with
    /// s_j = j for j < N/2 and j − N otherwise.
    pub fn momenta(&self) -> Array1<f64> {
        let n = self.points;
        let l = n as f64 * self.spacing;
        Array1::from_shape_fn(n, |j| {
            let s = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            2.0 * std::f64::consts::PI * s / l
        })
    }
}

/// Morse oscillator in atomic units: V(x) = D(e^{−2βx} − 2e^{−βx}), minimum
/// −D at x = 0.
#[derive(Clone, Debug)]
pub struct MorseModel {
    pub mass: f64,
    pub beta: f64,
    pub depth: f64,
    pub grid: SpatialGrid,
}

impl MorseModel {
    /// Nuclear dynamics of H2: m = 918.5, β = 0.9374, D = 0.164 atomic
    /// units. The default grid of 256 points on [−2.4, 4.0) keeps the
    /// displaced initial packet below 1e-10 amplitude at both edges.
    pub fn hydrogen() -> Self {
        let grid = SpatialGrid::new(256, -2.4, 6.4 / 256.0).expect("power-of-two grid");
        Self {
            mass: 918.5,
            beta: 0.9374,
            depth: 0.164,
            grid,
        }
    }

    pub fn potential(&self, x: f64) -> f64 {
        self.depth * ((-2.0 * self.beta * x).exp() - 2.0 * (-self.beta * x).exp())
    }

    pub fn grid_potential(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.grid.points, |j| self.potential(self.grid.x(j)))
    }

    /// Frequency of the harmonic expansion around the minimum: ω = β√(2D/m).
    pub fn harmonic_frequency(&self) -> f64 {
        self.beta * (2.0 * self.depth / self.mass).sqrt()
    }
}

/// Ground state of the harmonic approximation to the Morse minimum,
/// displaced by `displacement` (bohr): ψ(x) ∝ exp(−mω(x−x_d)²/2),
/// normalized on the grid.
pub fn gaussian_packet(model: &MorseModel, displacement: f64) -> Result<StateVector> {
    let grid = &model.grid;
    let span = grid.spacing * (grid.points - 1) as f64;
    if displacement < grid.origin || displacement > grid.origin + span {
        return Err(Error::InvalidParameter(
            "displacement is outside the grid".into(),
        ));
    }
    let a = model.mass * model.harmonic_frequency() / 2.0;
    let raw = Array1::from_shape_fn(grid.points, |j| {
        let d = grid.x(j) - displacement;
        C64::new((-a * d * d).exp(), 0.0)
    });
    let packet = StateVector::new(raw)?.normalized()?;
    let edge = packet.amplitudes()[0]
        .norm()
        .max(packet.amplitudes()[grid.points - 1].norm());
    if edge > 1e-10 {
        return Err(Error::GridTooSmall { amplitude: edge });
    }
    Ok(packet)
}

/// ⟨x⟩ on the grid.
pub fn position_expectation(grid: &SpatialGrid, psi: &StateVector) -> f64 {
    psi.amplitudes()
        .iter()
        .enumerate()
        .map(|(j, z)| grid.x(j) * z.norm_sqr())
        .sum()
}

/// ⟨H⟩ = ⟨V⟩ + ⟨P²/2m⟩, the kinetic part evaluated in momentum space.
pub fn energy_expectation(model: &MorseModel, psi: &StateVector) -> f64 {
    let n = model.grid.points;
    let v: f64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(j, z)| model.potential(model.grid.x(j)) * z.norm_sqr())
        .sum();
    let mut buf: Vec<C64> = psi.amplitudes().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let momenta = model.grid.momenta();
    let t: f64 = buf
        .iter()
        .enumerate()
        .map(|(k, z)| momenta[k] * momenta[k] / (2.0 * model.mass) * z.norm_sqr())
        .sum::<f64>()
        / n as f64;
    v + t
}

/// Matrix-free SOFT propagator
/// U = e^{−iV dt/2} F⁻¹ e^{−iP²/(2m) dt} F e^{−iV dt/2},
/// applied `substeps` times per link. Phase tables and FFT plans are cached
/// at construction; each apply allocates only its own buffers.
pub struct SoftPropagator {
    t_steps: usize,
    substeps: usize,
    dt: f64,
    half_potential: Array1<C64>,
    kinetic_scaled: Array1<C64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    n: usize,
}

impl SoftPropagator {
    pub fn new(model: &MorseModel, dt: f64, substeps: usize, t_steps: usize) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::InvalidParameter("substeps must be >= 1".into()));
        }
        if t_steps < 2 {
            return Err(Error::TooFewSteps(t_steps));
        }
        let n = model.grid.points;
        let potential = model.grid_potential();
        let half_potential =
            Array1::from_shape_fn(n, |j| C64::from_polar(1.0, -potential[j] * dt / 2.0));
        let momenta = model.grid.momenta();
        let scale = 1.0 / n as f64;
        let kinetic_scaled = Array1::from_shape_fn(n, |j| {
            C64::from_polar(scale, -momenta[j] * momenta[j] / (2.0 * model.mass) * dt)
        });
        let mut planner = FftPlanner::new();
        Ok(Self {
            t_steps,
            substeps,
            dt,
            half_potential,
            kinetic_scaled,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            n,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    fn run(&self, x: ArrayView1<'_, C64>, mut out: ArrayViewMut1<'_, C64>, adjoint: bool) {
        let mut buf: Vec<C64> = x.to_vec();
        let mut scratch = vec![
            C64::new(0.0, 0.0);
            self.fft
                .get_inplace_scratch_len()
                .max(self.ifft.get_inplace_scratch_len())
        ];
        for _ in 0..self.substeps {
            // U† is the step with every phase conjugated (the real 1/N
            // normalization folded into the kinetic table is unaffected).
            phase(&mut buf, &self.half_potential, adjoint);
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            phase(&mut buf, &self.kinetic_scaled, adjoint);
            self.ifft.process_with_scratch(&mut buf, &mut scratch);
            phase(&mut buf, &self.half_potential, adjoint);
        }
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = *b;
        }
    }
}

fn phase(buf: &mut [C64], table: &Array1<C64>, conjugate: bool) {
    if conjugate {
        for (b, p) in buf.iter_mut().zip(table.iter()) {
            *b *= p.conj();
        }
    } else {
        for (b, p) in buf.iter_mut().zip(table.iter()) {
            *b *= p;
        }
    }
}

impl PropagatorProvider for SoftPropagator {
    fn steps(&self) -> usize {
        self.t_steps
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, _t: usize, x: ArrayView1<'_, C64>, out: ArrayViewMut1<'_, C64>) {
        self.run(x, out, false);
    }

    fn apply_adjoint_into(&self, _t: usize, x: ArrayView1<'_, C64>, out: ArrayViewMut1<'_, C64>) {
        self.run(x, out, true);
    }
}

/// One SOFT step of length dt applied to ψ; dt = 0 reduces to the identity
/// up to Fourier round-trip rounding.
pub fn soft_step(model: &MorseModel, dt: f64, psi: &StateVector) -> Result<StateVector> {
    if psi.dim() != model.grid.points {
        return Err(Error::DimensionMismatch {
            expected: model.grid.points,
            got: psi.dim(),
        });
    }
    let prop = SoftPropagator::new(model, dt, 1, 2)?;
    Ok(prop.apply(0, psi))
}

/// The fine/coarse propagator pair over blocks of length k·dt: U_f composes
/// k SOFT steps of dt, U_c is a single SOFT step of k·dt.
pub fn make_fine_coarse(
    model: &MorseModel,
    dt: f64,
    k: usize,
    t_blocks: usize,
) -> Result<(SoftPropagator, SoftPropagator)> {
    let fine = SoftPropagator::new(model, dt, k, t_blocks)?;
    let coarse = SoftPropagator::new(model, dt * k as f64, 1, t_blocks)?;
    Ok((fine, coarse))
}

/// Serial propagation ψ_0, U_0ψ_0, U_1U_0ψ_0, …, for all T slices.
pub fn serial_trajectory(
    provider: &dyn PropagatorProvider,
    psi0: &StateVector,
) -> Result<Vec<StateVector>> {
    if psi0.dim() != provider.dim() {
        return Err(Error::DimensionMismatch {
            expected: provider.dim(),
            got: psi0.dim(),
        });
    }
    let mut out = Vec::with_capacity(provider.steps());
    out.push(psi0.clone());
    for t in 0..provider.steps() - 1 {
        let next = provider.apply(t, out.last().expect("non-empty"));
        out.push(next);
    }
    Ok(out)
}

/// Wrapper that counts forward and adjoint applications; used to verify the
/// operation-count contracts of the solvers.
pub struct CountingProvider<P: PropagatorProvider> {
    inner: P,
    forward: AtomicUsize,
    adjoint: AtomicUsize,
}

impl<P: PropagatorProvider> CountingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            forward: AtomicUsize::new(0),
            adjoint: AtomicUsize::new(0),
        }
    }

    pub fn forward_count(&self) -> usize {
        self.forward.load(Ordering::Relaxed)
    }

    pub fn adjoint_count(&self) -> usize {
        self.adjoint.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.forward.store(0, Ordering::Relaxed);
        self.adjoint.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: PropagatorProvider> PropagatorProvider for CountingProvider<P> {
    fn steps(&self) -> usize {
        self.inner.steps()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, t: usize, x: ArrayView1<'_, C64>, out: ArrayViewMut1<'_, C64>) {
        self.forward.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_into(t, x, out);
    }

    fn apply_adjoint_into(&self, t: usize, x: ArrayView1<'_, C64>, out: ArrayViewMut1<'_, C64>) {
        self.adjoint.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_adjoint_into(t, x, out);
    }
}
