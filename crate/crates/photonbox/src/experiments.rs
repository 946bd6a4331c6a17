//! Named, seeded experiment drivers with CSV output.
//!
//! Each experiment resolves its parameters from defaults, an optional flat
//! `key = value` config file and command-line overrides (unknown keys are
//! rejected), runs deterministically for a fixed seed regardless of worker
//! threads, and writes CSV files whose comment header embeds the crate
//! version, the seed and every resolved parameter.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::damping::{
    advantage_time, average_qfi, binomial_populations, eta_of_t, exact_populations,
    fisher_info_lossy, lossy_probe, max_useful_trials, optimal_qfi, qfi_lossy, DampingParams,
};
use crate::error::{Error, Result};
use crate::estimate::{cascade_ensemble, wrap_phase};
use crate::fock::CavityPureState;
use crate::prepare::{feedback_prepare, trajectory_ensemble, FeedbackConfig};
use crate::ramsey::GeometryParams;
use crate::report::{fmt, write_csv};
use crate::rng::CounterRng;
use crate::sensing::{
    displacement_sensitivity, displacement_sensitivity_cramer_rao, max_slope_position,
    phase_profile, z_zero,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PHOTONBOX_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Fringe,
    FisherMap,
    Advantage,
    Trajectories,
    PrepareFeedback,
    Cascade,
    Sensing,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Fringe,
        Experiment::FisherMap,
        Experiment::Advantage,
        Experiment::Trajectories,
        Experiment::PrepareFeedback,
        Experiment::Cascade,
        Experiment::Sensing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Fringe => "fringe",
            Experiment::FisherMap => "fisher-map",
            Experiment::Advantage => "advantage",
            Experiment::Trajectories => "trajectories",
            Experiment::PrepareFeedback => "prepare-feedback",
            Experiment::Cascade => "cascade",
            Experiment::Sensing => "sensing",
        }
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        match self {
            Experiment::Fringe => vec![
                ("n", "8"),
                ("eta", "0,0.1,0.2"),
                ("points", "601"),
                ("theta_max", "6.283185307179586"),
            ],
            Experiment::FisherMap => vec![
                ("n", "8"),
                ("eta", "0,0.1,0.2"),
                ("points", "311"),
                ("theta_max", "3.141592653589793"),
            ],
            Experiment::Advantage => vec![
                ("n", "8"),
                ("tc", "0.130"),
                ("nb", "0.05"),
                ("tau", "82e-6"),
                ("t_max", "0.5"),
                ("points", "251"),
                ("m_points", "200"),
            ],
            Experiment::Trajectories => vec![
                ("init", "coherent:1.7320508075688772"),
                ("theta_s", "0.6"),
                ("count", "4000"),
                ("max_atoms", "100"),
                ("tol", "1e-3"),
                ("dim", "15"),
            ],
            Experiment::PrepareFeedback => vec![
                ("target", "2"),
                ("dim", "15"),
                ("runs", "50"),
                ("theta_s", "0.6"),
                ("stop_alpha", "0.01"),
                ("window", "50"),
                ("max_steps", "500"),
            ],
            Experiment::Cascade => vec![
                ("levels", "4"),
                ("m", "100"),
                ("reps", "500"),
                ("theta", "random"),
                ("half_term", "true"),
            ],
            Experiment::Sensing => vec![
                ("m", "1000"),
                ("n", "8"),
                ("points", "201"),
                ("z_max", "auto"),
                ("omega0_hz", "49e3"),
                ("waist", "6e-3"),
                ("detuning_hz", "245e3"),
                ("velocity", "250"),
                ("omega_c_hz", "51.099e9"),
            ],
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .iter()
            .find(|e| e.name() == s)
            .copied()
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown experiment '{s}' (expected one of: {})",
                    Experiment::ALL.map(|e| e.name()).join(", ")
                ))
            })
    }
}

/// Fully resolved run description.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// New config with the experiment's default parameters, seed 0 and the
    /// default output path (`$PHOTONBOX_OUT_DIR/<name>.csv` or cwd).
    pub fn new(experiment: Experiment) -> Self {
        let params = experiment
            .defaults()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let dir = std::env::var(OUT_DIR_ENV).unwrap_or_default();
        let out = Path::new(&dir).join(format!("{}.csv", experiment.name()));
        Self { experiment, params, seed: 0, out }
    }

    /// Parses `<experiment> [--config FILE] [--seed N] [--out PATH]
    /// [--key value]...`. File entries are applied first, command-line flags
    /// override them, unknown parameter keys are rejected.
    pub fn from_cli(args: &[String]) -> Result<Self> {
        if args.is_empty() {
            return Err(Error::Config("missing experiment name".into()));
        }
        let experiment: Experiment = args[0].parse()?;
        let mut cfg = Self::new(experiment);

        let mut overrides: Vec<(String, String)> = Vec::new();
        let mut it = args[1..].iter();
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .ok_or_else(|| Error::Config(format!("expected --key, got '{flag}'")))?;
            let value = it
                .next()
                .ok_or_else(|| Error::Config(format!("flag --{key} needs a value")))?;
            overrides.push((key.replace('-', "_"), value.clone()));
        }

        // config file first, then command-line overrides
        if let Some((_, path)) = overrides.iter().find(|(k, _)| k == "config") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config '{path}': {e}")))?;
            for (k, v) in parse_config_file(&text)? {
                cfg.apply(&k, &v)?;
            }
        }
        for (k, v) in overrides.iter().filter(|(k, _)| k != "config") {
            cfg.apply(k, v)?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad seed '{value}'")))?;
            }
            "out" => self.out = PathBuf::from(value),
            k if self.params.contains_key(k) => {
                self.params.insert(k.to_string(), value.to_string());
            }
            _ => {
                return Err(Error::Config(format!(
                    "unknown key '{key}' for experiment '{}' (known: {})",
                    self.experiment.name(),
                    self.params.keys().cloned().collect::<Vec<_>>().join(", ")
                )))
            }
        }
        Ok(())
    }

    fn meta(&self) -> Vec<(String, String)> {
        let mut meta = vec![
            ("experiment".to_string(), self.experiment.name().to_string()),
            ("seed".to_string(), self.seed.to_string()),
        ];
        meta.extend(self.params.iter().map(|(k, v)| (k.clone(), v.clone())));
        meta
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.params[key]
            .parse()
            .map_err(|_| Error::Config(format!("key '{key}': bad number '{}'", self.params[key])))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        self.params[key]
            .parse()
            .map_err(|_| Error::Config(format!("key '{key}': bad integer '{}'", self.params[key])))
    }

    fn bool(&self, key: &str) -> Result<bool> {
        self.params[key]
            .parse()
            .map_err(|_| Error::Config(format!("key '{key}': bad bool '{}'", self.params[key])))
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.params[key]
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("key '{key}': bad list entry '{s}'")))
            })
            .collect()
    }

    fn sibling(&self, suffix: &str) -> PathBuf {
        let stem = self.out.file_stem().unwrap_or_default().to_string_lossy();
        let ext = self.out.extension().map(|e| e.to_string_lossy().to_string());
        let name = match ext {
            Some(e) => format!("{stem}_{suffix}.{e}"),
            None => format!("{stem}_{suffix}"),
        };
        self.out.with_file_name(name)
    }
}

/// Flat `key = value` lines, `#` comments, blank lines allowed.
fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        entries.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(entries)
}

fn parse_init(spec: &str, dim: usize) -> Result<CavityPureState> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "vacuum" => CavityPureState::vacuum(dim),
        "fock" => {
            let n: usize = arg
                .parse()
                .map_err(|_| Error::Config(format!("bad fock init '{spec}'")))?;
            CavityPureState::fock(n, dim)
        }
        "coherent" => {
            let a: f64 = arg
                .parse()
                .map_err(|_| Error::Config(format!("bad coherent init '{spec}'")))?;
            CavityPureState::coherent(C64::new(a, 0.0), dim)
        }
        "squeezed" => {
            let (a, z) = arg
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("squeezed init needs alpha,zeta: '{spec}'")))?;
            let a: f64 = a.trim().parse().map_err(|_| Error::Config(format!("bad '{spec}'")))?;
            let z: f64 = z.trim().parse().map_err(|_| Error::Config(format!("bad '{spec}'")))?;
            CavityPureState::squeezed_coherent(a, z, dim)
        }
        _ => Err(Error::Config(format!(
            "unknown init '{spec}' (vacuum | fock:N | coherent:A | squeezed:A,Z)"
        ))),
    }
}

/// What a run produced: the files written and printable headline values.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub headline: Vec<(String, String)>,
}

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    match cfg.experiment {
        Experiment::Fringe => run_fringe(cfg),
        Experiment::FisherMap => run_fisher_map(cfg),
        Experiment::Advantage => run_advantage(cfg),
        Experiment::Trajectories => run_trajectories(cfg),
        Experiment::PrepareFeedback => run_prepare_feedback(cfg),
        Experiment::Cascade => run_cascade(cfg),
        Experiment::Sensing => run_sensing(cfg),
    }
}

/// Detection probability p(0|θ) fringes per loss intensity.
fn run_fringe(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let n = cfg.usize("n")?;
    let etas = cfg.f64_list("eta")?;
    let points = cfg.usize("points")?.max(2);
    let theta_max = cfg.f64("theta_max")?;

    let mut columns = vec!["theta".to_string()];
    for eta in &etas {
        columns.push(format!("p0_eta{eta}"));
    }
    let col_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();

    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let theta = theta_max * k as f64 / (points - 1) as f64;
        let mut row = vec![fmt(theta)];
        for &eta in &etas {
            let s = lossy_probe(n, eta, theta);
            row.push(fmt((1.0 + s.probe.interference().re) / 2.0));
        }
        rows.push(row);
    }
    write_csv(&cfg.out, &cfg.meta(), &col_refs, &rows)?;
    Ok(RunSummary { files: vec![cfg.out.clone()], headline: vec![] })
}

/// FI and QFI against θ per loss intensity.
fn run_fisher_map(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let n = cfg.usize("n")?;
    let etas = cfg.f64_list("eta")?;
    let points = cfg.usize("points")?.max(2);
    let theta_max = cfg.f64("theta_max")?;

    let mut columns = vec!["theta".to_string()];
    for eta in &etas {
        columns.push(format!("fi_eta{eta}"));
        columns.push(format!("qfi_eta{eta}"));
    }
    let col_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();

    let mut rows = Vec::with_capacity(points);
    for k in 1..=points {
        let theta = theta_max * k as f64 / (points + 1) as f64;
        let mut row = vec![fmt(theta)];
        for &eta in &etas {
            row.push(fmt(fisher_info_lossy(n, eta, theta)));
            row.push(fmt(qfi_lossy(n, eta, theta)));
        }
        rows.push(row);
    }
    write_csv(&cfg.out, &cfg.meta(), &col_refs, &rows)?;
    Ok(RunSummary { files: vec![cfg.out.clone()], headline: vec![] })
}

/// Optimal-information decay, Fock survival, closed-form fidelity check and
/// the trial budget (headline: t*, m*, m_max).
fn run_advantage(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let n = cfg.usize("n")?;
    let d = DampingParams::new(cfg.f64("tc")?, cfg.f64("nb")?, cfg.f64("tau")?)?;
    let t_max = cfg.f64("t_max")?;
    let points = cfg.usize("points")?.max(2);
    let m_points = cfg.usize("m_points")?.max(2);

    let adv = advantage_time(n, &d)?;
    let m_max = max_useful_trials(n, &d)?;

    let mut meta = cfg.meta();
    meta.push(("t_star".into(), fmt(adv.t_star)));
    meta.push(("m_star".into(), adv.m_star.to_string()));
    meta.push(("m_max".into(), m_max.to_string()));

    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let t = t_max * k as f64 / (points - 1) as f64;
        let eta = eta_of_t(t, &d);
        let exact = exact_populations(n, t, &d)?;
        let binom = binomial_populations(n, eta)?.padded(exact.dim())?;
        rows.push(vec![
            fmt(t),
            fmt(optimal_qfi(n, eta)),
            fmt((1.0 - eta).powi(n as i32)),
            fmt(exact.fidelity(&binom)?),
        ]);
    }
    write_csv(
        &cfg.out,
        &meta,
        &["t", "f_o", "fock_survival", "fidelity_exact_binomial"],
        &rows,
    )?;

    let trials_path = cfg.sibling("trials");
    let m_hi = (m_max as f64 * 1.2) as usize;
    let mut rows = Vec::with_capacity(m_points);
    for k in 0..m_points {
        let m = 1 + (m_hi - 1) * k / (m_points - 1);
        rows.push(vec![
            m.to_string(),
            fmt(average_qfi(n, m, &d)),
            fmt(optimal_qfi(n, eta_of_t(m as f64 * d.tau_a, &d))),
        ]);
    }
    write_csv(&trials_path, &meta, &["m", "f_a", "f_o"], &rows)?;

    Ok(RunSummary {
        files: vec![cfg.out.clone(), trials_path],
        headline: vec![
            ("t_star".into(), format!("{:.6} s", adv.t_star)),
            ("m_star".into(), adv.m_star.to_string()),
            ("m_max".into(), m_max.to_string()),
        ],
    })
}

/// Stochastic preparation ensemble; one CSV row per trajectory.
fn run_trajectories(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let dim = cfg.usize("dim")?;
    let initial = parse_init(&cfg.params["init"], dim)?;
    let theta_s = cfg.f64("theta_s")?;
    let count = cfg.usize("count")?;
    let max_atoms = cfg.usize("max_atoms")?;
    let tol = cfg.f64("tol")?;

    let results = trajectory_ensemble(cfg.seed, count, &initial, theta_s, max_atoms, tol);

    let rows: Vec<Vec<String>> = results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let class = r
                .converged_class
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join("|");
            vec![
                CounterRng::stream(cfg.seed, i as u64).key().to_string(),
                r.record.len().to_string(),
                (r.converged as u8).to_string(),
                class,
                fmt(r.class_mass),
            ]
        })
        .collect();
    write_csv(
        &cfg.out,
        &cfg.meta(),
        &["seed", "m_used", "converged", "converged_class", "class_mass"],
        &rows,
    )?;

    let converged = results.iter().filter(|r| r.converged).count();
    Ok(RunSummary {
        files: vec![cfg.out.clone()],
        headline: vec![(
            "converged".into(),
            format!("{converged}/{count}"),
        )],
    })
}

/// Deterministic feedback preparation runs; per-run summary plus step traces.
fn run_prepare_feedback(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let mut fb = FeedbackConfig::new(cfg.usize("target")?, cfg.usize("dim")?)?;
    fb.sensor_theta = cfg.f64("theta_s")?;
    fb.stop_alpha = cfg.f64("stop_alpha")?;
    fb.stop_window = cfg.usize("window")?;
    fb.max_steps = cfg.usize("max_steps")?;
    fb.validate()?;
    let runs = cfg.usize("runs")?;

    let mut summary_rows = Vec::with_capacity(runs);
    let mut step_rows = Vec::new();
    let mut successes = 0usize;
    for run in 0..runs {
        let mut rng = CounterRng::stream(cfg.seed, run as u64);
        let out = feedback_prepare(&mut rng, &fb)?;
        if out.success {
            successes += 1;
        }
        summary_rows.push(vec![
            run.to_string(),
            rng.key().to_string(),
            (out.success as u8).to_string(),
            out.sensors_fired.to_string(),
            out.displacements.to_string(),
            fmt(out.final_state.population(fb.target)),
        ]);
        for (step, s) in out.history.iter().enumerate() {
            step_rows.push(vec![
                run.to_string(),
                step.to_string(),
                fmt(s.fidelity),
                fmt(s.alpha),
            ]);
        }
    }
    write_csv(
        &cfg.out,
        &cfg.meta(),
        &["run", "seed", "success", "sensors", "displacements", "p_target"],
        &summary_rows,
    )?;
    let steps_path = cfg.sibling("steps");
    write_csv(
        &steps_path,
        &cfg.meta(),
        &["run", "step", "fidelity_to_target", "alpha"],
        &step_rows,
    )?;

    Ok(RunSummary {
        files: vec![cfg.out.clone(), steps_path],
        headline: vec![("success".into(), format!("{successes}/{runs}"))],
    })
}

/// Cascaded estimation ensemble: a stage table for the first repetition and a
/// per-repetition summary (headline: rms against the bound of the largest
/// stage, under both trial accountings).
fn run_cascade(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let levels = cfg.usize("levels")?;
    let m = cfg.usize("m")?;
    let reps = cfg.usize("reps")?;
    let half_term = cfg.bool("half_term")?;

    let thetas: Vec<f64> = if cfg.params["theta"] == "random" {
        let mut rng = CounterRng::stream(cfg.seed, u64::MAX);
        (0..reps).map(|_| rng.uniform_in(-PI, PI)).collect()
    } else {
        let theta = cfg.f64("theta")?;
        vec![wrap_phase(theta); reps]
    };

    let outs = cascade_ensemble(cfg.seed, levels, m, half_term, &thetas)?;

    let mult_last = (1u64 << (levels - 1)) as f64 + if half_term { 0.5 } else { 0.0 };
    let bound_per_stage = 1.0 / ((m as f64).sqrt() * mult_last);
    let bound_total = 1.0 / (((2 * m * levels) as f64).sqrt() * mult_last);
    let rms = (outs
        .iter()
        .zip(&thetas)
        .map(|(o, &t)| wrap_phase(o.estimate.theta_hat - t).powi(2))
        .sum::<f64>()
        / reps as f64)
        .sqrt();

    let mut meta = cfg.meta();
    meta.push(("rms".into(), fmt(rms)));
    meta.push(("bound_per_stage_m".into(), fmt(bound_per_stage)));
    meta.push(("bound_total_trials".into(), fmt(bound_total)));

    let stage_rows: Vec<Vec<String>> = outs[0]
        .stages
        .iter()
        .map(|s| {
            vec![
                s.level.to_string(),
                s.photons.to_string(),
                fmt(s.phase_true),
                fmt(s.phase_hat),
                fmt(s.error),
            ]
        })
        .collect();
    let stages_path = cfg.sibling("stages");
    write_csv(
        &stages_path,
        &meta,
        &["j", "photons", "phase_true", "phase_hat", "err"],
        &stage_rows,
    )?;

    let rows: Vec<Vec<String>> = outs
        .iter()
        .zip(&thetas)
        .enumerate()
        .map(|(i, (o, &t))| {
            vec![
                i.to_string(),
                fmt(t),
                fmt(o.estimate.theta_hat),
                fmt(wrap_phase(o.estimate.theta_hat - t).abs()),
                (o.estimate.ambiguous as u8).to_string(),
            ]
        })
        .collect();
    write_csv(
        &cfg.out,
        &meta,
        &["rep", "theta_true", "theta_hat", "abs_err", "ambiguous"],
        &rows,
    )?;

    Ok(RunSummary {
        files: vec![cfg.out.clone(), stages_path],
        headline: vec![
            ("rms".into(), fmt(rms)),
            ("bound_per_stage_m".into(), fmt(bound_per_stage)),
            ("rms_over_bound".into(), fmt(rms / bound_per_stage)),
        ],
    })
}

/// Axial phase profile sweep (headline: z₀ and the two δz conventions).
fn run_sensing(cfg: &ExperimentConfig) -> Result<RunSummary> {
    use std::f64::consts::TAU;
    let m = cfg.usize("m")?;
    let n = cfg.usize("n")?;
    let points = cfg.usize("points")?.max(2);
    let g = GeometryParams::new(
        TAU * cfg.f64("omega0_hz")?,
        cfg.f64("waist")?,
        TAU * cfg.f64("detuning_hz")?,
        cfg.f64("velocity")?,
        TAU * cfg.f64("omega_c_hz")?,
        0.0,
        0.0,
    )?;

    let z_max = if cfg.params["z_max"] == "auto" {
        2.0 * max_slope_position(&g)
    } else {
        cfg.f64("z_max")?
    };

    let z0 = z_zero(&g);
    let dz = displacement_sensitivity(m, n, &g);
    let dz_crb = displacement_sensitivity_cramer_rao(m, n, &g);

    let mut meta = cfg.meta();
    meta.push(("z0_m".into(), fmt(z0)));
    meta.push(("dz_m".into(), fmt(dz)));
    meta.push(("dz_crb_m".into(), fmt(dz_crb)));

    let rows: Vec<Vec<String>> = (0..points)
        .map(|k| {
            let z = z_max * k as f64 / (points - 1) as f64;
            let (z, theta, slope) = phase_profile(&g, z);
            vec![fmt(z), fmt(theta), fmt(slope)]
        })
        .collect();
    write_csv(&cfg.out, &meta, &["z", "theta", "dtheta_dz"], &rows)?;

    Ok(RunSummary {
        files: vec![cfg.out.clone()],
        headline: vec![
            ("z0".into(), format!("{:.4} mm", z0 * 1e3)),
            ("dz".into(), format!("{:.4} um", dz * 1e6)),
            ("dz_crb".into(), format!("{:.4} um", dz_crb * 1e6)),
        ],
    })
}
