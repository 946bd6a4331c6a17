//! Fock-state preparation by repeated QND measurement.
//!
//! Stochastic route: probe atoms cross the cavity one by one at a fixed
//! interaction phase θ_s and the detection record ω_M = (i₁, …, i_M)
//! progressively collapses the field. The photon-number posterior after the
//! record is the product form
//!
//! ```text
//! P(n | ω_M) ∝ |c_n|² cos^{2η}[(n+1/2)θ_s/2] sin^{2ξ}[(n+1/2)θ_s/2]
//! ```
//!
//! with η (ξ) the number of +1 (−1) outcomes — identical to composing the
//! per-atom state updates. The field converges to one *degeneracy class*:
//! the set of photon numbers sharing the outcome likelihood
//! cos²[(n+1/2)θ_s/2] at this θ_s. For generic θ_s all classes are
//! singletons and the limit is a Fock state, reached with the prior
//! probability |c_N|²; at rational multiples of π the classes merge and the
//! limit is a superposition inside the class.
//!
//! Deterministic route ([`feedback_prepare`]): a sensor atom updates a full
//! density-matrix filter, a controller picks the grid displacement that
//! maximizes fidelity to the target Fock state, and the actuator applies it.
//! The controller stops once its decision stays below `stop_alpha` for
//! `stop_window` consecutive atoms (the persistent "α → 0" condition; a
//! single quiet decision is not enough because a distribution centered on the
//! target but still mixed also yields α* = 0 while the remaining collapse is
//! pure measurement work).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{displacement_operator, CavityDensity, CavityPureState, PhotonDistribution};
use crate::ramsey::{sample_outcome, Outcome, RamseyParams};
use crate::rng::CounterRng;

/// Ordered detector record of one preparation run, together with the
/// interaction phase it was taken at.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRecord {
    outcomes: Vec<Outcome>,
    theta_s: f64,
}

impl OutcomeRecord {
    pub fn new(theta_s: f64) -> Self {
        Self { outcomes: Vec::new(), theta_s }
    }

    pub fn from_outcomes(outcomes: Vec<Outcome>, theta_s: f64) -> Self {
        Self { outcomes, theta_s }
    }

    pub fn push(&mut self, i: Outcome) {
        self.outcomes.push(i);
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn theta_s(&self) -> f64 {
        self.theta_s
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Number of +1 outcomes.
    pub fn plus_count(&self) -> usize {
        self.outcomes.iter().filter(|i| **i == Outcome::Plus).count()
    }

    pub fn minus_count(&self) -> usize {
        self.len() - self.plus_count()
    }
}

/// Photon-number posterior after a record, accumulated in log space so that
/// records thousands of atoms long cannot underflow. Equals the sequential
/// per-atom update composition exactly (product form).
pub fn posterior_distribution(
    initial: &CavityPureState,
    record: &OutcomeRecord,
) -> Result<PhotonDistribution> {
    let prior = initial.photon_distribution();
    if record.is_empty() {
        return Ok(prior);
    }
    let eta = record.plus_count() as f64;
    let xi = record.minus_count() as f64;
    let mut log_p = Vec::with_capacity(prior.dim());
    for (n, &w) in prior.probs().iter().enumerate() {
        let x = (n as f64 + 0.5) * record.theta_s() / 2.0;
        let (s, c) = x.sin_cos();
        let lp = if w <= 0.0 || (eta > 0.0 && c == 0.0) || (xi > 0.0 && s == 0.0) {
            f64::NEG_INFINITY
        } else {
            w.ln() + 2.0 * eta * c.abs().ln() + 2.0 * xi * s.abs().ln()
        };
        log_p.push(lp);
    }
    let max = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateRecord);
    }
    let probs: Vec<f64> = log_p.iter().map(|&lp| (lp - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::DegenerateRecord);
    }
    PhotonDistribution::new(probs.into_iter().map(|p| p / total).collect())
}

/// Partition of {0..dim−1} into sets of photon numbers with identical outcome
/// likelihood cos²[(n+1/2)θ_s/2] (within 1e−12). Classes are sorted by their
/// smallest member.
pub fn degeneracy_classes(theta_s: f64, dim: usize) -> Vec<Vec<usize>> {
    let value = |n: usize| ((n as f64 + 0.5) * theta_s / 2.0).cos().powi(2);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &n in &order {
        match classes.last_mut() {
            Some(cls) if (value(*cls.last().unwrap()) - value(n)).abs() <= 1e-12 => cls.push(n),
            _ => classes.push(vec![n]),
        }
    }
    for cls in &mut classes {
        cls.sort_unstable();
    }
    classes.sort_by_key(|cls| cls[0]);
    classes
}

/// One stochastic preparation trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    pub record: OutcomeRecord,
    pub final_state: CavityPureState,
    /// Photon numbers of the winning degeneracy class.
    pub converged_class: Vec<usize>,
    /// Posterior mass on that class at the end of the run.
    pub class_mass: f64,
    pub converged: bool,
}

/// Repeatedly samples probe outcomes and updates the field until the
/// posterior mass on a single degeneracy class reaches 1 − `convergence_tol`
/// or `max_atoms` atoms have crossed. Non-convergence is a valid result.
pub fn run_trajectory(
    rng: &mut CounterRng,
    initial: &CavityPureState,
    theta_s: f64,
    max_atoms: usize,
    convergence_tol: f64,
) -> TrajectoryResult {
    let classes = degeneracy_classes(theta_s, initial.dim());
    let params = RamseyParams::new(theta_s).expect("theta_s finite");
    let mut state = initial.clone();
    let mut record = OutcomeRecord::new(theta_s);

    loop {
        let dist = state.photon_distribution();
        let (best, mass) = classes
            .iter()
            .enumerate()
            .map(|(k, cls)| (k, cls.iter().map(|&n| dist.probs()[n]).sum::<f64>()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one class");
        if mass >= 1.0 - convergence_tol {
            return TrajectoryResult {
                record,
                final_state: state,
                converged_class: classes[best].clone(),
                class_mass: mass,
                converged: true,
            };
        }
        if record.len() >= max_atoms {
            return TrajectoryResult {
                record,
                final_state: state,
                converged_class: classes[best].clone(),
                class_mass: mass,
                converged: false,
            };
        }
        let (outcome, post) = sample_outcome(rng, &state, &params);
        record.push(outcome);
        state = post;
    }
}

/// Seeded trajectory ensemble; member i draws from the derived stream
/// (master_seed, i), so the result is bitwise identical however the work is
/// distributed over threads.
pub fn trajectory_ensemble(
    master_seed: u64,
    count: usize,
    initial: &CavityPureState,
    theta_s: f64,
    max_atoms: usize,
    convergence_tol: f64,
) -> Vec<TrajectoryResult> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = CounterRng::stream(master_seed, i as u64);
            run_trajectory(&mut rng, initial, theta_s, max_atoms, convergence_tol)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// deterministic feedback preparation
// ---------------------------------------------------------------------------

/// Configuration of the displacement feedback loop.
#[derive(Clone, Debug)]
pub struct FeedbackConfig {
    /// Target photon number n_t.
    pub target: usize,
    /// Truncation dimension (needs headroom: target < dim − 4).
    pub dim: usize,
    /// Candidate real displacement amplitudes available to the controller.
    pub alpha_grid: Vec<f64>,
    /// Decisions with |α*| below this threshold count as "no correction".
    pub stop_alpha: f64,
    /// Consecutive quiet decisions required before the source is stopped.
    pub stop_window: usize,
    /// Sensor-atom budget.
    pub max_steps: usize,
    /// Interaction phase of the sensor atoms.
    pub sensor_theta: f64,
}

impl FeedbackConfig {
    /// Defaults: 21 amplitudes uniform in [−1, 1], stop_alpha = 0.01,
    /// stop_window = 50, max_steps = 500, sensor θ_s = 0.6.
    pub fn new(target: usize, dim: usize) -> Result<Self> {
        let cfg = Self {
            target,
            dim,
            alpha_grid: (0..21).map(|k| -1.0 + 0.1 * k as f64).collect(),
            stop_alpha: 0.01,
            stop_window: 50,
            max_steps: 500,
            sensor_theta: 0.6,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 5 || self.target + 4 >= self.dim {
            return Err(Error::InvalidParameter(format!(
                "target {} needs dim > target + 4, got dim {}",
                self.target, self.dim
            )));
        }
        if !(self.stop_alpha > 0.0) {
            return Err(Error::InvalidParameter("stop_alpha must be positive".into()));
        }
        if self.alpha_grid.is_empty() || self.stop_window == 0 || self.max_steps == 0 {
            return Err(Error::InvalidParameter("empty grid or zero budget".into()));
        }
        Ok(())
    }
}

/// One controller decision in the feedback loop.
#[derive(Clone, Copy, Debug)]
pub struct FeedbackStep {
    /// Fidelity to the target after the actuation (if any) and the sensor
    /// update of this step.
    pub fidelity: f64,
    /// Displacement applied this step; 0.0 when the controller stayed quiet.
    pub alpha: f64,
}

/// Result of one feedback preparation run.
#[derive(Clone, Debug)]
pub struct FeedbackOutcome {
    pub history: Vec<FeedbackStep>,
    /// Final population of the target Fock level reached 0.8.
    pub success: bool,
    pub final_state: CavityDensity,
    pub displacements: usize,
    pub sensors_fired: usize,
}

/// Deterministic preparation from vacuum. Each cycle the controller decides
/// on the current filter state (stopping once its corrections persistently
/// vanish, before any further atom is spent), the actuator applies the chosen
/// displacement, then a sensor atom fires and the filter updates. Success
/// means p(n_t) ≥ 0.8.
pub fn feedback_prepare(rng: &mut CounterRng, cfg: &FeedbackConfig) -> Result<FeedbackOutcome> {
    cfg.validate()?;
    let dim = cfg.dim;
    let grid: Vec<(f64, nalgebra::DMatrix<num_complex::Complex64>)> = cfg
        .alpha_grid
        .iter()
        .map(|&a| (a, displacement_operator(num_complex::Complex64::new(a, 0.0), dim)))
        .collect();

    let cos_w: Vec<f64> = (0..dim)
        .map(|n| ((n as f64 + 0.5) * cfg.sensor_theta / 2.0).cos())
        .collect();
    let sin_w: Vec<f64> = (0..dim)
        .map(|n| ((n as f64 + 0.5) * cfg.sensor_theta / 2.0).sin())
        .collect();

    let mut rho = CavityDensity::from_pure(&CavityPureState::vacuum(dim)?);
    let mut history = Vec::new();
    let mut quiet = 0usize;
    let mut displacements = 0usize;
    let mut sensors = 0usize;

    while sensors < cfg.max_steps {
        // controller: argmax over the grid of <n_t| D ρ D† |n_t>, ties toward
        // the smaller |α|
        let mut best = (0.0f64, f64::NEG_INFINITY);
        for (a, d) in &grid {
            let row = d.row(cfg.target);
            let mut f = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    f += (row[i] * rho.matrix()[(i, j)] * row[j].conj()).re;
                }
            }
            if f > best.1 + 1e-12 || ((f - best.1).abs() <= 1e-12 && a.abs() < best.0.abs()) {
                best = (*a, f);
            }
        }
        let (alpha_star, _) = best;

        let mut applied = 0.0;
        if alpha_star.abs() < cfg.stop_alpha {
            quiet += 1;
            if quiet >= cfg.stop_window {
                break;
            }
        } else {
            quiet = 0;
            let d = &grid.iter().find(|(a, _)| *a == alpha_star).expect("grid member").1;
            rho = rho.conjugated(d)?;
            displacements += 1;
            applied = alpha_star;
        }

        // sensor atom: QND channel on the filter state
        let p_plus: f64 = (0..dim)
            .map(|n| cos_w[n] * cos_w[n] * rho.population(n))
            .sum::<f64>()
            .clamp(0.0, 1.0);
        let weights = if rng.bernoulli(p_plus) { &cos_w } else { &sin_w };
        rho = rho.apply_diagonal_kraus(weights)?.0;
        sensors += 1;

        history.push(FeedbackStep { fidelity: rho.population(cfg.target), alpha: applied });
    }

    let p_target = rho.population(cfg.target);
    Ok(FeedbackOutcome {
        history,
        success: p_target >= 0.8,
        final_state: rho,
        displacements,
        sensors_fired: sensors,
    })
}
