use std::process::ExitCode;

use photonbox::experiments::{run, Experiment, ExperimentConfig};
use photonbox::Error;

const USAGE: &str = "\
usage: photonbox run <experiment> [--config FILE] [--seed N] [--out PATH] [--key value]...

experiments:
  fringe            detection-probability fringes p(0|theta) per loss intensity
  fisher-map        FI and QFI against theta per loss intensity
  advantage         optimal-information decay, t*, m*, m_max, trial average
  trajectories      stochastic Fock-state preparation ensemble
  prepare-feedback  displacement-feedback preparation runs
  cascade           cascaded phase estimation ensemble
  sensing           axial phase profile and displacement sensitivity

Parameters are flat key-value pairs; `--config FILE` reads `key = value`
lines first, command-line flags override. Unknown keys are rejected.
Default output directory: $PHOTONBOX_OUT_DIR (else the working directory).
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("run") => match ExperimentConfig::from_cli(&args[1..]) {
            Ok(cfg) => match run(&cfg) {
                Ok(summary) => {
                    for (k, v) in &summary.headline {
                        println!("{k} = {v}");
                    }
                    for f in &summary.files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => report(e),
            },
            Err(e) => report(e),
        },
        Some("list") => {
            for e in Experiment::ALL {
                println!("{}", e.name());
            }
            ExitCode::SUCCESS
        }
        Some("--help") | Some("-h") | Some("help") | None => {
            print!("{USAGE}");
            ExitCode::SUCCESS
        }
        Some(other) => {
            eprintln!("unknown command '{other}'\n{USAGE}");
            ExitCode::from(2)
        }
    }
}

fn report(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => ExitCode::from(2),
        Error::TruncationOverflow { .. }
        | Error::NoCrossing { .. }
        | Error::BadDifferenceStep { .. }
        | Error::DegenerateRecord => ExitCode::from(3),
        _ => ExitCode::FAILURE,
    }
}
