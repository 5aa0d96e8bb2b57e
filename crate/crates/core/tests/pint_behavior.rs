//! Solver behavior of the parallel-in-time engine: conjugate-gradient
//! iteration bounds, preconditioner operation counts, parareal finite
//! termination, and the Morse pipeline against serial fine propagation.

mod common;

use clockdyn::linalg::sample;
use clockdyn::pint::{
    cg_solve, parareal_solve, rhs_initial, CoarseSolver, LinearClock, PararealStatus,
    WorkCounters,
};
use clockdyn::propagators::{
    gaussian_packet, make_fine_coarse, serial_trajectory, CountingProvider, DensePropagators,
    PropagatorProvider, ANGSTROM_TO_BOHR,
};
use clockdyn::propagators::MorseModel;

fn random_provider(
    rng: &mut rand_chacha::ChaCha8Rng,
    n: usize,
    t_steps: usize,
) -> DensePropagators {
    let unitaries: Vec<_> = (0..t_steps - 1)
        .map(|_| sample::random_unitary(rng, n))
        .collect();
    DensePropagators::new(unitaries).unwrap()
}

/// Unpreconditioned CG meets the T-distinct-eigenvalue bound with slack for
/// floating point: ≤ T + 2 iterations to a relative residual of 1e-10.
#[test]
fn cg_unpreconditioned_iteration_bound() {
    let mut rng = sample::rng(200);
    for case in 0..12 {
        let t_steps = 2 + (case * 3) % 28;
        let n = 1 + (case * 5) % 16;
        let provider = random_provider(&mut rng, n.max(1), t_steps.max(2));
        let clock = LinearClock::new(&provider).unwrap();
        let psi0 = sample::random_state(&mut rng, provider.dim());
        let rhs = rhs_initial(&psi0, provider.steps()).unwrap();
        let outcome = cg_solve(&clock, &rhs, 1e-10, None).unwrap();
        assert!(
            outcome.iterations <= provider.steps() + 2,
            "T={} N={}: {} iterations",
            provider.steps(),
            provider.dim(),
            outcome.iterations
        );
        assert_eq!(outcome.counters.fine, outcome.iterations);
        assert_eq!(outcome.counters.coarse, 0);
    }
}

/// CG solves the linear clock to the discrete trajectory itself.
#[test]
fn cg_solution_is_the_serial_trajectory() {
    let mut rng = sample::rng(201);
    let provider = random_provider(&mut rng, 6, 9);
    let clock = LinearClock::new(&provider).unwrap();
    let psi0 = sample::random_state(&mut rng, 6);
    let rhs = rhs_initial(&psi0, 9).unwrap();
    let outcome = cg_solve(&clock, &rhs, 1e-12, None).unwrap();
    let serial = serial_trajectory(&provider, &psi0).unwrap();
    for (t, expected) in serial.iter().enumerate() {
        let got = outcome.solution.slice_state(t);
        assert!(common::state_gap(&got, expected) < 1e-10, "slice {t}");
    }
}

/// The preconditioner spends exactly T−1 coarse and T−1 adjoint
/// applications per solve and reaches 1e-10 relative residual.
#[test]
fn coarse_solve_operation_count_contract() {
    let mut rng = sample::rng(202);
    for t_steps in [2usize, 5, 9, 16] {
        let n = 4;
        let counting = CountingProvider::new(random_provider(&mut rng, n, t_steps));
        let solver = CoarseSolver::new(&counting).unwrap();
        let b = sample::random_history(&mut rng, n, t_steps);
        let mut counters = WorkCounters::default();
        let x = solver.solve(&b, &mut counters).unwrap();
        assert_eq!(counting.forward_count(), t_steps - 1, "T = {t_steps}");
        assert_eq!(counting.adjoint_count(), t_steps - 1, "T = {t_steps}");
        assert_eq!(counters.coarse, 1);

        let clock = LinearClock::new(&counting).unwrap();
        let image = clock.apply(&x).unwrap();
        let residual: f64 = image
            .data()
            .iter()
            .zip(b.data().iter())
            .map(|(a, v)| (a - v).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(residual <= 1e-10 * b.norm());
    }
}

/// Classic parareal finite termination: after k corrector iterations the
/// first k+1 slices agree with the serial fine trajectory to 1e-12.
#[test]
fn parareal_finite_termination_exactness() {
    let mut rng = sample::rng(203);
    let n = 4;
    let t_steps = 6;
    let fine = random_provider(&mut rng, n, t_steps);
    // A deliberately imperfect coarse propagator: the fine links blended
    // with the identity.
    let coarse_unitaries: Vec<_> = (0..t_steps - 1)
        .map(|t| {
            let u = fine.dense(t);
            let blended = &u * num_complex::Complex64::new(0.9, 0.0)
                + &clockdyn::linalg::identity(n) * num_complex::Complex64::new(0.1, 0.0);
            // Re-unitarize through QR so the provider contract holds.
            let (q, r) = ndarray_linalg::QR::qr(&blended).unwrap();
            let mut out = q;
            for (j, mut col) in out.columns_mut().into_iter().enumerate() {
                let d = r[[j, j]];
                let phase = d / d.norm();
                col.mapv_inplace(|z| z * phase);
            }
            out
        })
        .collect();
    let coarse = DensePropagators::new(coarse_unitaries).unwrap();
    let psi0 = sample::random_state(&mut rng, n);
    let serial = serial_trajectory(&fine, &psi0).unwrap();

    let run = parareal_solve(&fine, &coarse, &psi0, 1e-300, 1).unwrap();
    for (k, iterate) in run.iterates.iter().enumerate() {
        for t in 0..=k.min(t_steps - 1) {
            let gap = common::state_gap(&iterate[t], &serial[t]);
            assert!(gap < 1e-12, "iteration {k}, slice {t}: gap {gap:.3e}");
        }
    }
}

/// Morse pipeline: the preconditioned clock solve and parareal both land on
/// the serial fine trajectory.
#[test]
fn morse_clock_and_parareal_match_serial_fine() {
    let model = MorseModel::hydrogen();
    let t_blocks = 8;
    let dt = 0.015;
    let (fine, coarse) = make_fine_coarse(&model, dt, t_blocks, t_blocks).unwrap();
    let psi0 = gaussian_packet(&model, -0.1 * ANGSTROM_TO_BOHR).unwrap();
    let serial = serial_trajectory(&fine, &psi0).unwrap();
    let tol = 1e-8;

    let clock = LinearClock::new(&fine).unwrap().with_workers(2);
    let solver = CoarseSolver::new(&coarse).unwrap();
    let rhs = rhs_initial(&psi0, t_blocks).unwrap();
    let outcome = cg_solve(&clock, &rhs, tol, Some(&solver)).unwrap();
    assert!(outcome.iterations < t_blocks);
    for (t, expected) in serial.iter().enumerate() {
        let got = outcome.solution.slice_state(t);
        assert!(
            common::state_gap(&got, expected) <= tol * 10.0,
            "clock slice {t}"
        );
    }

    let run = parareal_solve(&fine, &coarse, &psi0, tol, 2).unwrap();
    assert!(matches!(run.status, PararealStatus::Converged { .. }));
    for (t, expected) in serial.iter().enumerate() {
        let gap = common::state_gap(&run.trajectory[t], expected);
        assert!(gap <= tol * 10.0, "parareal slice {t}: gap {gap:.3e}");
    }
}

/// Work counters translate into the paper's speedup estimates.
#[test]
fn speedups_from_a_real_solve() {
    let mut rng = sample::rng(204);
    let provider = random_provider(&mut rng, 4, 16);
    let clock = LinearClock::new(&provider).unwrap();
    let solver = CoarseSolver::new(&provider).unwrap();
    let psi0 = sample::random_state(&mut rng, 4);
    let rhs = rhs_initial(&psi0, 16).unwrap();
    let outcome = cg_solve(&clock, &rhs, 1e-10, Some(&solver)).unwrap();
    // Exact preconditioner: one iteration, one fine apply, one coarse solve
    // (convergence is detected before another preconditioner call).
    let s = clockdyn::pint::speedup_clock(&outcome.counters, 16).unwrap();
    assert_eq!(outcome.counters.fine, 1);
    assert_eq!(outcome.counters.coarse, 1);
    assert!((s - 4.0).abs() < 1e-12);
}
