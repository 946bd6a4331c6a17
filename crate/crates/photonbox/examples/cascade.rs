//! Cascaded phase estimation: stages with 1, 2, 4, … photons lift the
//! 2π/N fringe ambiguity while keeping Heisenberg-type accuracy from the
//! largest stage.
//!
//! ```bash
//! cargo run --release -p photonbox --example cascade
//! ```

use std::f64::consts::PI;

use photonbox::estimate::{cascade_ensemble, cascade_run, wrap_phase, CascadeConfig};
use photonbox::report::{fmt, write_csv};
use photonbox::CounterRng;

fn main() -> Result<(), photonbox::Error> {
    // one run in detail
    let theta_true = 2.35;
    let cfg = CascadeConfig::new(4, 100, theta_true)?;
    let mut rng = CounterRng::new(3);
    let out = cascade_run(&mut rng, &cfg)?;
    println!("true theta = {theta_true}");
    for s in &out.stages {
        println!(
            "stage {} ({} photons, multiplier {:>4}): phase {:+.4} estimated {:+.4} (err {:+.4})",
            s.level, s.photons, s.multiplier, s.phase_true, s.phase_hat, s.error
        );
    }
    println!(
        "reconstructed theta = {:+.5} (err {:+.2e}, resources {} photon passages)",
        out.estimate.theta_hat,
        wrap_phase(out.estimate.theta_hat - theta_true),
        out.estimate.resources_used
    );

    // ensemble over random phases against the accuracy bound
    let reps = 500;
    let (levels, m) = (4, 100);
    let mut rng = CounterRng::stream(42, u64::MAX);
    let thetas: Vec<f64> = (0..reps).map(|_| rng.uniform_in(-PI, PI)).collect();
    let outs = cascade_ensemble(42, levels, m, true, &thetas)?;
    let rms = (outs
        .iter()
        .zip(&thetas)
        .map(|(o, &t)| wrap_phase(o.estimate.theta_hat - t).powi(2))
        .sum::<f64>()
        / reps as f64)
        .sqrt();
    let bound = 1.0 / ((m as f64).sqrt() * ((1u64 << (levels - 1)) as f64 + 0.5));
    println!("\n{reps} random phases, L = {levels}, m = {m} per quadrature per stage:");
    println!("rms error = {rms:.4e}  vs bound {bound:.4e}  (ratio {:.2})", rms / bound);

    let rows: Vec<Vec<String>> = outs
        .iter()
        .zip(&thetas)
        .map(|(o, &t)| {
            vec![fmt(t), fmt(o.estimate.theta_hat), fmt(wrap_phase(o.estimate.theta_hat - t).abs())]
        })
        .collect();
    write_csv(
        "cascade.csv".as_ref(),
        &[
            ("levels".into(), levels.to_string()),
            ("m".into(), m.to_string()),
            ("rms".into(), fmt(rms)),
            ("bound".into(), fmt(bound)),
        ],
        &["theta_true", "theta_hat", "abs_err"],
        &rows,
    )?;
    println!("wrote cascade.csv");
    Ok(())
}
