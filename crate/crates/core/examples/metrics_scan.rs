use clockdyn::linalg::{sample, C64};
use clockdyn::metrics::{compare_tedvp_mclachlan, max_state_gap, ProjectionSpace};
use clockdyn::spin::{kron_state, random_product_state, vanadium_hamiltonian, SpinModelParams};
use clockdyn::StateVector;
use ndarray::Array1;

fn in_space_state(space: &ProjectionSpace, rng: &mut rand_chacha::ChaCha8Rng) -> StateVector {
    let raw = Array1::from_shape_fn(space.dim(), |_| sample::complex_normal(rng));
    StateVector::new(space.project_vector(&raw))
        .unwrap()
        .normalized()
        .unwrap()
}

fn main() {
    let p = SpinModelParams::paper();
    let h = vanadium_hamiltonian(&p, 0.0);
    for seed in [16u64, 5] {
        let mut rng = sample::rng(seed);
        let factors = random_product_state(&mut rng);
        let _psi0 = kron_state(&factors).unwrap();
        for (name, flips) in [("S", 1usize), ("SD", 2)] {
            let space = ProjectionSpace::excitations_from_product(&factors, flips).unwrap();
            let mut rng2 = sample::rng(seed.wrapping_add(1000));
            let start = in_space_state(&space, &mut rng2);
            for steps in [25usize, 50, 100] {
                let mut line = format!("seed {seed} {name} n={steps}: ");
                let mut prev: Option<f64> = None;
                for &dt in &[0.04, 0.02, 0.01, 0.005, 0.0025, 0.00125] {
                    let r = compare_tedvp_mclachlan(&space, &h, &start, dt, steps).unwrap();
                    let g = max_state_gap(&r.tedvp, &r.mvp);
                    let ratio = prev.map(|p| p / g);
                    prev = Some(g);
                    match ratio {
                        Some(q) => line += &format!("{g:.2e}(x{q:.1}) "),
                        None => line += &format!("{g:.2e} "),
                    }
                }
                println!("{line}");
            }
        }
    }
}
