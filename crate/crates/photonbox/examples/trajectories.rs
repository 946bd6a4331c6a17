//! Stochastic Fock-state preparation: an ensemble of measurement-collapse
//! trajectories from a coherent field, and the photon-number histogram of the
//! converged states (which reproduces the prior distribution).
//!
//! ```bash
//! cargo run --release -p photonbox --example trajectories
//! ```

use num_complex::Complex64;
use photonbox::fock::CavityPureState;
use photonbox::prepare::{degeneracy_classes, trajectory_ensemble};
use photonbox::report::{fmt, write_csv};

fn main() -> Result<(), photonbox::Error> {
    let dim = 15;
    let initial = CavityPureState::coherent(Complex64::new(3.0_f64.sqrt(), 0.0), dim)?;
    let theta_s = 0.6;
    let count = 4000;

    let results = trajectory_ensemble(7, count, &initial, theta_s, 10_000, 1e-3);
    let converged = results.iter().filter(|r| r.converged).count();
    println!("{converged}/{count} trajectories converged (theta_s = {theta_s})");

    let mut hist = vec![0usize; dim];
    let mut atoms = 0usize;
    for r in &results {
        if r.converged {
            hist[r.converged_class[0]] += 1;
        }
        atoms += r.record.len();
    }
    let converged_f = converged as f64;
    println!("mean atoms to convergence: {:.0}", atoms as f64 / count as f64);

    let prior = initial.photon_distribution();
    println!(" n   frequency   prior |c_n|^2");
    for (n, (h, p)) in hist.iter().zip(prior.probs()).enumerate().take(10) {
        println!("{n:2}   {:.4}      {:.4}", *h as f64 / converged_f, p);
    }

    let rows: Vec<Vec<String>> = (0..dim)
        .map(|n| {
            vec![
                n.to_string(),
                fmt(hist[n] as f64 / converged_f),
                fmt(prior.probs()[n]),
            ]
        })
        .collect();
    write_csv(
        "trajectories_hist.csv".as_ref(),
        &[("theta_s".into(), fmt(theta_s)), ("count".into(), count.to_string())],
        &["n", "frequency", "prior"],
        &rows,
    )?;
    println!("wrote trajectories_hist.csv");

    // at theta_s = pi/3 the likelihoods are degenerate and the field settles
    // into superpositions over whole classes
    let classes = degeneracy_classes(std::f64::consts::PI / 3.0, dim);
    println!("degeneracy classes at theta_s = pi/3: {classes:?}");
    let deg = trajectory_ensemble(8, 5, &initial, std::f64::consts::PI / 3.0, 10_000, 1e-3);
    for (i, r) in deg.iter().enumerate() {
        println!(
            "run {i}: converged to class {:?} after {} atoms (mass {:.4})",
            r.converged_class,
            r.record.len(),
            r.class_mass
        );
    }
    Ok(())
}
