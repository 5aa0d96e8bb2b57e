//! Three-spin vanadium model: the isotropic-exchange spin Hamiltonian with
//! static and pulsed fields, the time-dependent Hartree (mean-field)
//! reference path, transformed-excitation trajectory bases at the MF / CIS /
//! CISD / FCI truncation levels, and the projected clock eigenproblem that
//! yields approximate dynamics from each basis.

use ndarray::{array, s, Array1, Array2};

use crate::clock::extract_state;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig_lowest, inner, kron, matrix_exponential_unitary, C64, DenseHermitian,
    HistoryState, StateVector,
};
use crate::propagators::DensePropagators;

/// Spins in the vanadium triangle.
pub const N_SPINS: usize = 3;

/// Model parameters. Couplings are in kelvin, fields in tesla; `rescale`
/// divides the Hamiltonian by μB₀ = g·(μ_b/k_B)·B₀ so the Zeeman term has
/// unit coefficient and time is measured in the corresponding rescaled
/// units.
#[derive(Clone, Debug)]
pub struct SpinModelParams {
    /// Spectroscopic splitting factor g.
    pub g: f64,
    /// Exchange coupling between spin 1 and spins 2, 3 (kelvin).
    pub j_a: f64,
    /// Exchange coupling between spins 2 and 3 (kelvin).
    pub j_c: f64,
    /// Static longitudinal field (tesla).
    pub b0: f64,
    /// Amplitude of the transverse pulse (tesla).
    pub b1_amp: f64,
    /// Pulse carrier frequency m in B₁ ∝ exp(−t²/2)·cos(mt).
    pub m_pulse: f64,
    /// Bohr magneton over Boltzmann constant (kelvin/tesla).
    pub mu_b_over_kb: f64,
    pub rescale: bool,
}

impl SpinModelParams {
    /// Fitted couplings g = 1.95, J_a = 64.6 K, J_c = 6.9 K with B₀ = 200 T;
    /// the pulse amplitude defaults to one rescaled unit (B₁ = B₀) and
    /// m = 1.
    pub fn paper() -> Self {
        Self {
            g: 1.95,
            j_a: 64.6,
            j_c: 6.9,
            b0: 200.0,
            b1_amp: 200.0,
            m_pulse: 1.0,
            mu_b_over_kb: 0.67171,
            rescale: true,
        }
    }

    /// μB₀ in kelvin.
    pub fn mu_b0(&self) -> f64 {
        self.g * self.mu_b_over_kb * self.b0
    }

    /// B₁(t) = B1_amp·exp(−t²/2)·cos(m·t), in tesla.
    pub fn b1(&self, t: f64) -> f64 {
        self.b1_amp * (-t * t / 2.0).exp() * (self.m_pulse * t).cos()
    }

    pub fn without_pulse(mut self) -> Self {
        self.b1_amp = 0.0;
        self
    }
}

pub fn pauli_x() -> Array2<C64> {
    array![
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    ]
}

pub fn pauli_y() -> Array2<C64> {
    array![
        [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
        [C64::new(0.0, 1.0), C64::new(0.0, 0.0)]
    ]
}

pub fn pauli_z() -> Array2<C64> {
    array![
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]
    ]
}

/// Embeds a single-spin operator at `site` (site 0 is the leftmost tensor
/// factor).
pub fn site_operator(op: &Array2<C64>, site: usize, n_spins: usize) -> Array2<C64> {
    let mut out = if site == 0 {
        op.clone()
    } else {
        crate::linalg::identity(2)
    };
    for j in 1..n_spins {
        let next = if j == site {
            op.clone()
        } else {
            crate::linalg::identity(2)
        };
        out = kron(&out, &next);
    }
    out
}

/// S_a·S_b = Σ_α S_a^α S_b^α with Pauli operators (no spin-½ factors).
fn exchange(a: usize, b: usize, n_spins: usize) -> Array2<C64> {
    let mut out = Array2::zeros((1 << n_spins, 1 << n_spins));
    for op in [pauli_x(), pauli_y(), pauli_z()] {
        out += &site_operator(&op, a, n_spins).dot(&site_operator(&op, b, n_spins));
    }
    out
}

fn total_site_sum(op: &Array2<C64>, n_spins: usize) -> Array2<C64> {
    let mut out = Array2::zeros((1 << n_spins, 1 << n_spins));
    for site in 0..n_spins {
        out += &site_operator(op, site, n_spins);
    }
    out
}

pub fn total_sz(n_spins: usize) -> Array2<C64> {
    total_site_sum(&pauli_z(), n_spins)
}

/// The 8×8 spin Hamiltonian
/// H = J_a(S₁·S₂ + S₁·S₃) + J_c S₂·S₃ + μB₀ΣS_z + μB₁(t)ΣS_x,
/// divided by μB₀ when rescaling is on.
pub fn vanadium_hamiltonian(p: &SpinModelParams, t: f64) -> DenseHermitian {
    let n = N_SPINS;
    let mu_b0 = p.mu_b0();
    let mu_b1 = p.g * p.mu_b_over_kb * p.b1(t);
    let mut h = exchange(0, 1, n).mapv(|z| z * p.j_a);
    h += &exchange(0, 2, n).mapv(|z| z * p.j_a);
    h += &exchange(1, 2, n).mapv(|z| z * p.j_c);
    h += &total_sz(n).mapv(|z| z * mu_b0);
    h += &total_site_sum(&pauli_x(), n).mapv(|z| z * mu_b1);
    if p.rescale {
        h.mapv_inplace(|z| z / mu_b0);
    }
    DenseHermitian::new(h).expect("spin Hamiltonian is Hermitian by construction")
}

/// ETRS propagators of the full Hamiltonian on the grid t·dt.
pub fn etrs_propagators(p: &SpinModelParams, dt: f64, t_steps: usize) -> Result<DensePropagators> {
    DensePropagators::from_etrs(|t| vanadium_hamiltonian(p, t), dt, t_steps)
}

/// ⟨S_site^z⟩ of a normalized state.
pub fn sz_expectation(state: &StateVector, site: usize) -> f64 {
    let op = site_operator(&pauli_z(), site, N_SPINS);
    inner(state.view(), op.dot(state.amplitudes()).view()).re
}

pub fn kron_state(factors: &[Array1<C64>]) -> Result<StateVector> {
    let mut out = factors
        .first()
        .ok_or(Error::Empty("product factors"))?
        .clone();
    for f in &factors[1..] {
        let mut next = Array1::zeros(out.len() * f.len());
        for (i, a) in out.iter().enumerate() {
            for (j, b) in f.iter().enumerate() {
                next[i * f.len() + j] = a * b;
            }
        }
        out = next;
    }
    StateVector::new(out)
}

/// Seeded Haar-random product state, one qubit per site.
pub fn random_product_state(rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Array1<C64>> {
    (0..N_SPINS)
        .map(|_| crate::linalg::sample::random_qubit(rng))
        .collect()
}

/// The mean-field reference path: cumulative single-spin unitaries
/// U_t^i with |0⟩_i^t = U_t^i|0⟩, the product states they generate, and the
/// running energy expectation. The scalar amplitude a(t) stays a(0).
pub struct MeanFieldPath {
    pub site_unitaries: Vec<Vec<Array2<C64>>>,
    pub states: Vec<StateVector>,
    pub energies: Vec<f64>,
    pub amplitude: C64,
}

impl MeanFieldPath {
    pub fn steps(&self) -> usize {
        self.site_unitaries.len()
    }

    pub fn n_spins(&self) -> usize {
        self.site_unitaries[0].len()
    }

    pub fn site_state(&self, t: usize, site: usize) -> Array1<C64> {
        self.site_unitaries[t][site].column(0).to_owned()
    }
}

/// Integrates i U̇_i = (H^(i) − ((f−1)/f)E(t))·U_i with ETRS steps on the
/// mean-field Hamiltonians; H^(i) contracts the full Hamiltonian over the
/// other spins against the instantaneous product state and E(t) is the full
/// expectation value. The generator at t+dt is iterated to
/// self-consistency with two corrector passes.
pub fn mean_field_propagate(
    p: &SpinModelParams,
    factors: &[Array1<C64>],
    dt: f64,
    t_steps: usize,
) -> Result<MeanFieldPath> {
    if factors.len() != N_SPINS {
        return Err(Error::NotProductState);
    }
    for f in factors {
        if f.len() != 2 {
            return Err(Error::NotProductState);
        }
        let norm = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotProductState);
        }
    }
    if t_steps == 0 {
        return Err(Error::TooFewSteps(0));
    }

    let f_count = factors.len();
    let mut unitaries: Vec<Vec<Array2<C64>>> = Vec::with_capacity(t_steps);
    unitaries.push(
        factors
            .iter()
            .map(|phi| {
                array![
                    [phi[0], -phi[1].conj()],
                    [phi[1], phi[0].conj()]
                ]
            })
            .collect(),
    );

    for step in 0..t_steps - 1 {
        let tau = step as f64 * dt;
        let h_now = vanadium_hamiltonian(p, tau);
        let h_next = vanadium_hamiltonian(p, tau + dt);
        let current: Vec<Array1<C64>> = unitaries[step]
            .iter()
            .map(|u| u.column(0).to_owned())
            .collect();

        let k_now: Vec<DenseHermitian> = (0..f_count)
            .map(|site| mean_field_generator(h_now.matrix(), &current, site))
            .collect::<Result<_>>()?;

        // Predictor: a full step with the generator frozen at t.
        let mut predicted: Vec<Array1<C64>> = (0..f_count)
            .map(|site| {
                let u = matrix_exponential_unitary(&k_now[site], dt)?;
                Ok(u.dot(&current[site]))
            })
            .collect::<Result<_>>()?;

        // Two corrector passes make the t+dt generator self-consistent.
        let mut step_unitaries: Vec<Array2<C64>> = Vec::new();
        for _ in 0..2 {
            let k_next: Vec<DenseHermitian> = (0..f_count)
                .map(|site| mean_field_generator(h_next.matrix(), &predicted, site))
                .collect::<Result<_>>()?;
            step_unitaries = (0..f_count)
                .map(|site| {
                    let late = matrix_exponential_unitary(&k_next[site], dt / 2.0)?;
                    let early = matrix_exponential_unitary(&k_now[site], dt / 2.0)?;
                    Ok(late.dot(&early))
                })
                .collect::<Result<_>>()?;
            predicted = (0..f_count)
                .map(|site| step_unitaries[site].dot(&current[site]))
                .collect();
        }

        unitaries.push(
            (0..f_count)
                .map(|site| step_unitaries[site].dot(&unitaries[step][site]))
                .collect(),
        );
    }

    let mut states = Vec::with_capacity(t_steps);
    let mut energies = Vec::with_capacity(t_steps);
    for (t, site_us) in unitaries.iter().enumerate() {
        let parts: Vec<Array1<C64>> = site_us.iter().map(|u| u.column(0).to_owned()).collect();
        let state = kron_state(&parts)?;
        let h = vanadium_hamiltonian(p, t as f64 * dt);
        energies.push(inner(state.view(), h.matrix().dot(state.amplitudes()).view()).re);
        states.push(state);
    }

    Ok(MeanFieldPath {
        site_unitaries: unitaries,
        states,
        energies,
        amplitude: C64::new(1.0, 0.0),
    })
}

/// H^(site) − ((f−1)/f)·E, the single-spin mean-field generator.
fn mean_field_generator(
    h: &Array2<C64>,
    states: &[Array1<C64>],
    site: usize,
) -> Result<DenseHermitian> {
    let f = states.len();
    let contracted = contract_over_others(h, states, site);
    let full = kron_state(states)?;
    let energy = inner(full.view(), h.dot(full.amplitudes()).view()).re;
    let shift = (f as f64 - 1.0) / f as f64 * energy;
    let mut k = contracted;
    for i in 0..2 {
        k[[i, i]] -= C64::new(shift, 0.0);
    }
    DenseHermitian::new(k)
}

/// ⟨∏_{j≠site} φ_j| H |∏_{j≠site} φ_j⟩ as a 2×2 operator on `site`.
fn contract_over_others(h: &Array2<C64>, states: &[Array1<C64>], site: usize) -> Array2<C64> {
    let f = states.len();
    let dim = 1usize << f;
    let bit = |index: usize, j: usize| (index >> (f - 1 - j)) & 1;
    let mut out = Array2::zeros((2, 2));
    for row in 0..dim {
        for col in 0..dim {
            let mut weight = C64::new(1.0, 0.0);
            for j in 0..f {
                if j != site {
                    weight = weight * states[j][bit(row, j)].conj() * states[j][bit(col, j)];
                }
            }
            out[[bit(row, site), bit(col, site)]] += weight * h[[row, col]];
        }
    }
    out
}

/// Truncation level of the configuration-interaction expansion in
/// trajectory space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CiLevel {
    MeanField,
    Cis,
    Cisd,
    Fci,
}

impl CiLevel {
    pub fn max_excitations(&self, n_spins: usize) -> usize {
        match self {
            CiLevel::MeanField => 0,
            CiLevel::Cis => 1,
            CiLevel::Cisd => 2,
            CiLevel::Fci => n_spins,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CiLevel::MeanField => "mf",
            CiLevel::Cis => "cis",
            CiLevel::Cisd => "cisd",
            CiLevel::Fci => "fci",
        }
    }
}

/// Orthonormal system-time basis built from the mean-field reference by
/// applying transformed raising operators: per time t the states
/// ∏_{i∈mask} S̃⁺_it |φ_t⟩ ⊗ |t⟩ over all masks with at most the level's
/// excitation count. Columns are time-major; per-time block sizes are
/// 1 / n+1 / 1+n+n(n−1)/2 / 2ⁿ for MF / CIS / CISD / FCI.
pub struct TrajectoryBasis {
    pub columns: Array2<C64>,
    /// (time, excitation mask) for every column; bit i of the mask flips
    /// site i.
    pub labels: Vec<(usize, u32)>,
    pub system_dim: usize,
    pub t_steps: usize,
    pub per_time: usize,
}

impl TrajectoryBasis {
    pub fn size(&self) -> usize {
        self.labels.len()
    }
}

pub fn build_trajectory_basis(path: &MeanFieldPath, level: CiLevel) -> Result<TrajectoryBasis> {
    let f = path.n_spins();
    let n = 1usize << f;
    let t_steps = path.steps();
    let rank = level.max_excitations(f);

    let mut masks: Vec<u32> = (0..(1u32 << f))
        .filter(|m| (m.count_ones() as usize) <= rank)
        .collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let per_time = masks.len();

    let mut columns = Array2::zeros((n * t_steps, t_steps * per_time));
    let mut labels = Vec::with_capacity(t_steps * per_time);
    for t in 0..t_steps {
        for (b, &mask) in masks.iter().enumerate() {
            let parts: Vec<Array1<C64>> = (0..f)
                .map(|site| {
                    let excited = (mask >> site) & 1 == 1;
                    path.site_unitaries[t][site]
                        .column(if excited { 1 } else { 0 })
                        .to_owned()
                })
                .collect();
            let state = kron_state(&parts)?;
            let col = t * per_time + b;
            columns
                .slice_mut(s![t * n..(t + 1) * n, col])
                .assign(state.amplitudes());
            labels.push((t, mask));
        }
    }

    Ok(TrajectoryBasis {
        columns,
        labels,
        system_dim: n,
        t_steps,
        per_time,
    })
}

/// B†𝓗B in basis coordinates.
pub fn project_clock(clock: &DenseHermitian, basis: &TrajectoryBasis) -> Result<DenseHermitian> {
    if clock.dim() != basis.system_dim * basis.t_steps {
        return Err(Error::DimensionMismatch {
            expected: basis.system_dim * basis.t_steps,
            got: clock.dim(),
        });
    }
    let mb = clock.matrix().dot(&basis.columns);
    let projected = crate::linalg::adjoint(&basis.columns).dot(&mb);
    DenseHermitian::new(projected)
}

/// B†(𝓗 + C₀)B assembled link by link, never materializing the (N·T)²
/// clock. The basis is block-diagonal in time, so the projected operator is
/// block tridiagonal: diagonal blocks scale·(multiplicity)·I plus the
/// penalty at t = 0, off-diagonal blocks −scale·B_{t+1}† U_t B_t.
pub fn project_clock_blocked(
    provider: &dyn crate::propagators::PropagatorProvider,
    basis: &TrajectoryBasis,
    penalty: Option<&StateVector>,
    half_scaled: bool,
) -> Result<DenseHermitian> {
    let n = basis.system_dim;
    let t_steps = basis.t_steps;
    let per = basis.per_time;
    if provider.dim() != n || provider.steps() != t_steps {
        return Err(Error::DimensionMismatch {
            expected: n * t_steps,
            got: provider.dim() * provider.steps(),
        });
    }
    if t_steps < 2 {
        return Err(Error::TooFewSteps(t_steps));
    }
    let scale = if half_scaled { 0.5 } else { 1.0 };
    let block = |t: usize| basis.columns.slice(s![t * n..(t + 1) * n, t * per..(t + 1) * per]);

    let mut m: Array2<C64> = Array2::zeros((t_steps * per, t_steps * per));
    for t in 0..t_steps - 1 {
        let u = provider.dense(t);
        for b in 0..per {
            m[[t * per + b, t * per + b]] += scale;
            m[[(t + 1) * per + b, (t + 1) * per + b]] += scale;
        }
        let cross = crate::linalg::adjoint(&block(t + 1).to_owned())
            .dot(&u.dot(&block(t)));
        let cross_dag = crate::linalg::adjoint(&cross);
        for i in 0..per {
            for j in 0..per {
                m[[(t + 1) * per + i, t * per + j]] -= scale * cross[[i, j]];
                m[[t * per + i, (t + 1) * per + j]] -= scale * cross_dag[[i, j]];
            }
        }
    }
    if let Some(psi) = penalty {
        if psi.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: psi.dim(),
            });
        }
        // B₀†(I − |ψ⟩⟨ψ|)B₀ = I − p p† with p = B₀†ψ.
        let p = crate::linalg::adjoint(&block(0).to_owned()).dot(psi.amplitudes());
        for i in 0..per {
            for j in 0..per {
                let proj = p[i] * p[j].conj();
                m[[i, j]] += if i == j { C64::new(1.0, 0.0) - proj } else { -proj };
            }
        }
    }
    DenseHermitian::new(m)
}

/// Result of a configuration-interaction trajectory solve.
pub struct CiRun {
    /// Ground energy of the projected clock (with penalty).
    pub energy: f64,
    /// Per-slice physical states, renormalized and phase-fixed.
    pub trajectory: Vec<StateVector>,
    /// Slice norms before renormalization; unity on an exact trajectory.
    pub slice_norms: Vec<f64>,
    /// Squared projections of the ground eigenvector onto each excitation
    /// class 0..=n_spins.
    pub class_weights: Vec<f64>,
}

/// Solves the projected clock eigenproblem in the trajectory basis of the
/// given level, with the initial state pinned by the penalty term.
pub fn ci_trajectory(
    p: &SpinModelParams,
    factors: &[Array1<C64>],
    dt: f64,
    t_steps: usize,
    level: CiLevel,
) -> Result<CiRun> {
    let provider = etrs_propagators(p, dt, t_steps)?;
    let psi0 = kron_state(factors)?;
    let path = mean_field_propagate(p, factors, dt, t_steps)?;
    let basis = build_trajectory_basis(&path, level)?;

    let projected = project_clock_blocked(&provider, &basis, Some(&psi0), true)?;
    let ground = hermitian_eig_lowest(&projected, 1)?.remove(0);
    let (energy, coefficients) = ground;

    let full = basis.columns.dot(&coefficients);
    let phi = HistoryState::new(full, basis.system_dim)?;
    let mut trajectory = Vec::with_capacity(t_steps);
    let mut slice_norms = Vec::with_capacity(t_steps);
    for t in 0..t_steps {
        let raw = extract_state(&phi, t)?;
        slice_norms.push(raw.norm());
        trajectory.push(raw.normalized()?.phase_fixed());
    }

    let mut class_weights = vec![0.0; N_SPINS + 1];
    for (coef, (_, mask)) in coefficients.iter().zip(basis.labels.iter()) {
        class_weights[mask.count_ones() as usize] += coef.norm_sqr();
    }

    Ok(CiRun {
        energy,
        trajectory,
        slice_norms,
        class_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eig_full, max_abs, sample, unitarity_defect};

    fn zeeman_only() -> SpinModelParams {
        SpinModelParams {
            j_a: 0.0,
            j_c: 0.0,
            b1_amp: 0.0,
            ..SpinModelParams::paper()
        }
    }

    #[test]
    fn zeeman_spectrum() {
        let h = vanadium_hamiltonian(&zeeman_only(), 0.0);
        let (values, _) = hermitian_eig_full(h.matrix()).unwrap();
        let expected = [-3.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 3.0];
        for (got, want) in values.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rescaled_coupling_ratios() {
        let p = SpinModelParams::paper();
        assert!((p.mu_b0() - 261.9669).abs() < 1e-3);
        let h = vanadium_hamiltonian(&p, 1e9); // pulse envelope long gone
        // ⟨000|H|000⟩ = j_a·2 + j_c + 3 in rescaled units (all spins up).
        let corner = h.matrix()[[0, 0]].re;
        let ja = p.j_a / p.mu_b0();
        let jc = p.j_c / p.mu_b0();
        assert!((ja - 0.2466).abs() < 1e-4);
        assert!((jc - 0.02634).abs() < 1e-5);
        assert!((corner - (2.0 * ja + jc + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn static_hamiltonian_commutes_with_total_sz() {
        let p = SpinModelParams::paper().without_pulse();
        let h = vanadium_hamiltonian(&p, 0.3);
        let sz = total_sz(N_SPINS);
        let commutator = h.matrix().dot(&sz) - sz.dot(h.matrix());
        assert!(max_abs(&commutator) < 1e-12);
    }

    #[test]
    fn hamiltonian_hermitian_at_random_times() {
        let p = SpinModelParams::paper();
        let mut rng = sample::rng(40);
        for _ in 0..1000 {
            let t: f64 = rand::Rng::gen_range(&mut rng, 0.0..20.0);
            let h = vanadium_hamiltonian(&p, t);
            let defect = max_abs(&(h.matrix() - &crate::linalg::adjoint(h.matrix())));
            assert!(defect < 1e-12);
        }
    }

    #[test]
    fn mean_field_unitaries_stay_unitary() {
        let p = SpinModelParams::paper();
        let mut rng = sample::rng(41);
        let factors = random_product_state(&mut rng);
        let path = mean_field_propagate(&p, &factors, 0.01, 20).unwrap();
        for t in 0..path.steps() {
            for site in 0..N_SPINS {
                assert!(unitarity_defect(&path.site_unitaries[t][site]) < 1e-12);
            }
        }
        assert!((path.amplitude.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_product_input() {
        let p = SpinModelParams::paper();
        let bad = vec![
            Array1::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, 0.0)]),
            Array1::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
            Array1::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
        ];
        assert!(matches!(
            mean_field_propagate(&p, &bad, 0.01, 4),
            Err(Error::NotProductState)
        ));
    }

    #[test]
    fn basis_block_sizes() {
        let p = SpinModelParams::paper();
        let mut rng = sample::rng(42);
        let factors = random_product_state(&mut rng);
        let path = mean_field_propagate(&p, &factors, 0.01, 5).unwrap();
        for (level, expected) in [
            (CiLevel::MeanField, 1),
            (CiLevel::Cis, 4),
            (CiLevel::Cisd, 7),
            (CiLevel::Fci, 8),
        ] {
            let basis = build_trajectory_basis(&path, level).unwrap();
            assert_eq!(basis.per_time, expected);
            assert_eq!(basis.size(), expected * 5);
        }
    }

    #[test]
    fn bases_are_orthonormal() {
        let p = SpinModelParams::paper();
        let mut rng = sample::rng(43);
        let factors = random_product_state(&mut rng);
        let path = mean_field_propagate(&p, &factors, 0.01, 4).unwrap();
        for level in [CiLevel::MeanField, CiLevel::Cis, CiLevel::Cisd, CiLevel::Fci] {
            let basis = build_trajectory_basis(&path, level).unwrap();
            let gram = crate::linalg::adjoint(&basis.columns).dot(&basis.columns);
            let defect = max_abs(&(&gram - &crate::linalg::identity(basis.size())));
            assert!(defect < 1e-10, "level {level:?}: {defect:.3e}");
        }
    }

    #[test]
    fn blocked_projection_matches_generic_route() {
        let p = SpinModelParams::paper();
        let mut rng = sample::rng(45);
        let factors = random_product_state(&mut rng);
        let dt = 0.01;
        let t_steps = 4;
        let provider = etrs_propagators(&p, dt, t_steps).unwrap();
        let psi0 = kron_state(&factors).unwrap();
        let path = mean_field_propagate(&p, &factors, dt, t_steps).unwrap();
        for level in [CiLevel::Cis, CiLevel::Cisd, CiLevel::Fci] {
            let basis = build_trajectory_basis(&path, level).unwrap();
            let clock = crate::clock::ClockProblem::new(&provider)
                .with_penalty(psi0.clone())
                .assemble()
                .unwrap();
            let generic = project_clock(&clock, &basis).unwrap();
            let blocked =
                project_clock_blocked(&provider, &basis, Some(&psi0), true).unwrap();
            let gap = max_abs(&(generic.matrix() - blocked.matrix()));
            assert!(gap < 1e-12, "level {level:?}: gap {gap:.3e}");
        }
    }

    #[test]
    fn fci_basis_spans_the_full_space() {
        let p = SpinModelParams::paper();
        let mut rng = sample::rng(44);
        let factors = random_product_state(&mut rng);
        let t_steps = 3;
        let path = mean_field_propagate(&p, &factors, 0.01, t_steps).unwrap();
        let basis = build_trajectory_basis(&path, CiLevel::Fci).unwrap();
        assert_eq!(basis.size(), 8 * t_steps);
        // Square + orthonormal ⇒ the projector has full rank N·T.
        let gram = crate::linalg::adjoint(&basis.columns).dot(&basis.columns);
        assert!(max_abs(&(&gram - &crate::linalg::identity(8 * t_steps))) < 1e-10);
    }
}
