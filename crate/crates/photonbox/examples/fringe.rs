//! Detection-probability fringes p(0|θ) of the probe atom for several loss
//! intensities, via the experiment driver (config + CSV layer).
//!
//! ```bash
//! cargo run --release -p photonbox --example fringe
//! ```

use photonbox::experiments::{run, Experiment, ExperimentConfig};

fn main() -> Result<(), photonbox::Error> {
    let mut cfg = ExperimentConfig::new(Experiment::Fringe);
    cfg.params.insert("n".into(), "8".into());
    cfg.params.insert("eta".into(), "0,0.1,0.2".into());
    cfg.out = "fringe.csv".into();

    let summary = run(&cfg)?;
    for f in &summary.files {
        println!("wrote {}", f.display());
    }

    // the same curve straight from the library
    let s = photonbox::damping::lossy_probe(8, 0.1, 0.5);
    println!(
        "at theta = 0.5, eta = 0.1: p(0) = {:.4}, visibility base r = {:.4}",
        (1.0 + s.probe.interference().re) / 2.0,
        s.r
    );
    Ok(())
}
