//! Seeded runs must be bitwise reproducible regardless of worker threads.

use std::f64::consts::PI;

use photonbox::estimate::cascade_ensemble;
use photonbox::fock::CavityPureState;
use photonbox::prepare::trajectory_ensemble;

fn on_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn trajectory_ensemble_independent_of_thread_count() {
    let initial =
        CavityPureState::coherent(num_complex::Complex64::new(3.0_f64.sqrt(), 0.0), 15).unwrap();
    let single = on_pool(1, || trajectory_ensemble(99, 64, &initial, 0.6, 300, 1e-3));
    let many = on_pool(8, || trajectory_ensemble(99, 64, &initial, 0.6, 300, 1e-3));
    assert_eq!(single.len(), many.len());
    for (a, b) in single.iter().zip(&many) {
        assert_eq!(a.record.outcomes(), b.record.outcomes());
        assert_eq!(a.converged_class, b.converged_class);
        assert_eq!(a.class_mass.to_bits(), b.class_mass.to_bits());
        for (x, y) in a.final_state.amps().iter().zip(b.final_state.amps()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}

#[test]
fn cascade_ensemble_independent_of_thread_count() {
    let thetas: Vec<f64> = (0..24).map(|k| -PI + 0.26 * k as f64).collect();
    let single = on_pool(1, || cascade_ensemble(5, 4, 80, true, &thetas).unwrap());
    let many = on_pool(8, || cascade_ensemble(5, 4, 80, true, &thetas).unwrap());
    for (a, b) in single.iter().zip(&many) {
        assert_eq!(
            a.estimate.theta_hat.to_bits(),
            b.estimate.theta_hat.to_bits()
        );
        for (x, y) in a.stages.iter().zip(&b.stages) {
            assert_eq!(x.phase_hat.to_bits(), y.phase_hat.to_bits());
        }
    }
}
