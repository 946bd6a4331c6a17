//! Deterministic Fock-state preparation: a displacement-feedback loop drives
//! the field from vacuum to a target photon number, one sensor atom at a
//! time.
//!
//! ```bash
//! cargo run --release -p photonbox --example feedback
//! ```

use photonbox::prepare::{feedback_prepare, FeedbackConfig};
use photonbox::report::{fmt, write_csv};
use photonbox::CounterRng;

fn main() -> Result<(), photonbox::Error> {
    let target = 3;
    let cfg = FeedbackConfig::new(target, 15)?;
    let mut rng = CounterRng::new(12);

    let out = feedback_prepare(&mut rng, &cfg)?;
    println!(
        "target |{target}>: success = {}, p(target) = {:.4}",
        out.success,
        out.final_state.population(target)
    );
    println!(
        "{} sensor atoms, {} displacements applied",
        out.sensors_fired, out.displacements
    );

    let final_dist = out.final_state.photon_distribution();
    println!("final populations:");
    for n in 0..8 {
        println!("  p({n}) = {:.4}", final_dist.probs()[n]);
    }

    let rows: Vec<Vec<String>> = out
        .history
        .iter()
        .enumerate()
        .map(|(step, s)| vec![step.to_string(), fmt(s.fidelity), fmt(s.alpha)])
        .collect();
    write_csv(
        "feedback_steps.csv".as_ref(),
        &[("target".into(), target.to_string())],
        &["step", "fidelity_to_target", "alpha"],
        &rows,
    )?;
    println!("wrote feedback_steps.csv");
    Ok(())
}
