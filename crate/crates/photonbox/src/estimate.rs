//! Estimators and precision bounds for the dispersive phase θ.
//!
//! A Fock probe field |N⟩ makes every σ_z readout a Bernoulli draw with
//! p(+1) = cos²[((N+1/2)θ + φ_R)/2], so the per-probe Fisher information
//! about the accumulated phase Φ = (N+1/2)θ is exactly 1 for every quadrature
//! φ_R, and m probes bound the estimate by δθ ≥ 1/(√m (N+1/2)).
//!
//! [`estimate_phase`] implements the two-quadrature maximum-likelihood
//! estimator (φ_R ∈ {0, π/2}): the moment initializer atan2(−⟨σ_z⟩₁, ⟨σ_z⟩₀)
//! is refined to the exact likelihood maximum on the circle, which saturates
//! the bound asymptotically at every interior point.
//!
//! Since Φ is only known mod 2π, a single Fock state leaves a 2π/(N+1/2)
//! fringe ambiguity. The cascade ([`cascade_run`]) removes it with L stages of
//! geometrically growing photon numbers 2^j: each stage estimates the wrapped
//! phase Θ_j and a successive-refinement pass ([`reconstruct_theta`]) divides
//! the previous error by the stage multiplier, ending at the Heisenberg-type
//! accuracy of the largest stage at roughly twice the single-N bound.
//!
//! Under cavity loss the information of the readout peaks as the interaction
//! phase approaches zero; [`two_step_adaptive`] spends a tenth of the budget
//! locating θ, recenters the channel by a known compensating phase, and reads
//! the residual at mid-fringe where the full optimum F_o is available.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::CavityPureState;
use crate::prepare::OutcomeRecord;
use crate::ramsey::{sample_outcome, Outcome, RamseyParams};
use crate::rng::CounterRng;

/// Wraps into [−π, π).
pub fn wrap_phase(x: f64) -> f64 {
    x - TAU * ((x + PI) / TAU).floor()
}

/// Noiseless Cramér–Rao bound δθ ≥ 1/(√m (N + 1/2)).
pub fn crb_noiseless(n_photons: usize, m: usize) -> f64 {
    1.0 / ((m as f64).sqrt() * (n_photons as f64 + 0.5))
}

/// The three single-pass bounds at a common total resource N_tot = N + m:
/// the QND strategy reuses one N-photon state for all m probes, the
/// entangled benchmark consumes N photons per trial (N_tot/N trials), and the
/// standard quantum limit spends N_tot uncorrelated passages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResourceComparison {
    pub qnd: f64,
    pub noon: f64,
    pub sql: f64,
    pub total_resource: f64,
}

pub fn resource_comparison(n_photons: usize, m: usize) -> ResourceComparison {
    let n = n_photons as f64;
    let total = n + m as f64;
    ResourceComparison {
        qnd: crb_noiseless(n_photons, m),
        noon: 1.0 / (n * total).sqrt(),
        sql: 1.0 / total.sqrt(),
        total_resource: total,
    }
}

/// Poisson-averaged Fisher information over the photon number of a coherent
/// state: F = (n̄ + 1/2)² + n̄.
pub fn fisher_avg_coherent(nbar: f64) -> f64 {
    (nbar + 0.5).powi(2) + nbar
}

/// Θ_j = 2^j θ mod [−π, π) for j = 0..L−1 (the idealized stage phases).
pub fn stage_phases(theta: f64, levels: usize) -> Vec<f64> {
    (0..levels)
        .map(|j| wrap_phase((1u64 << j) as f64 * theta))
        .collect()
}

fn refine(init: f64, estimates: &[f64], multipliers: &[f64]) -> f64 {
    let mut theta = init;
    for (est, mult) in estimates.iter().zip(multipliers) {
        theta += wrap_phase(est - mult * theta) / mult;
    }
    theta
}

fn residual_score(theta: f64, estimates: &[f64], multipliers: &[f64]) -> f64 {
    estimates
        .iter()
        .zip(multipliers)
        .map(|(est, mult)| wrap_phase(est - mult * theta).powi(2))
        .sum()
}

/// Runs the successive refinement from `init`, resolving the 2π ambiguity of
/// the initializer: both branches init and init ∓ 2π are refined and the one
/// with the smaller summed squared wrap-residual wins (they tie exactly for
/// integer multipliers, where a 2π offset is invisible).
pub(crate) fn refine_with_branch(init: f64, estimates: &[f64], multipliers: &[f64]) -> f64 {
    let sibling = if init >= 0.0 { init - TAU } else { init + TAU };
    let a = refine(init, estimates, multipliers);
    let b = refine(sibling, estimates, multipliers);
    let (sa, sb) = (
        residual_score(a, estimates, multipliers),
        residual_score(b, estimates, multipliers),
    );
    if sb < sa - 1e-15 {
        b
    } else {
        a
    }
}

/// Successive refinement of stage estimates Θ̂_j into θ̂:
/// θ̂ ← Θ̂₀/mult₀, then θ̂ ← θ̂ + wrap(Θ̂_j − mult_j θ̂)/mult_j per stage.
/// Exact inputs give back θ exactly; per-stage errors below π/2 contract by
/// the multiplier ratio at every step.
///
/// Multipliers must be strictly increasing; the first is expected to be 1 for
/// the idealized 2^j ladder (for the (2^j + 1/2) ladder use the vernier
/// initialization of [`cascade_run`], which feeds this same refinement).
pub fn reconstruct_theta(stage_estimates: &[f64], multipliers: &[f64]) -> f64 {
    assert_eq!(stage_estimates.len(), multipliers.len());
    assert!(!multipliers.is_empty(), "need at least one stage");
    assert!(
        multipliers.windows(2).all(|w| w[0] < w[1]) && multipliers[0] > 0.0,
        "multipliers must be positive and strictly increasing"
    );
    refine_with_branch(stage_estimates[0] / multipliers[0], stage_estimates, multipliers)
}

// ---------------------------------------------------------------------------
// two-quadrature maximum likelihood
// ---------------------------------------------------------------------------

/// Success counts of the two quadrature ensembles.
#[derive(Clone, Copy, Debug)]
struct QuadratureCounts {
    k0: f64,
    m0: f64,
    k1: f64,
    m1: f64,
}

impl QuadratureCounts {
    fn from_records(quad0: &OutcomeRecord, quad90: &OutcomeRecord) -> Self {
        Self {
            k0: quad0.plus_count() as f64,
            m0: quad0.len() as f64,
            k1: quad90.plus_count() as f64,
            m1: quad90.len() as f64,
        }
    }

    /// log-likelihood of the accumulated phase Φ:
    /// quadrature 0 has p(+1) = (1 + cos Φ)/2, quadrature π/2 has
    /// p(+1) = (1 − sin Φ)/2.
    fn log_likelihood(&self, phi: f64) -> f64 {
        let floor = 1e-300;
        let p0 = ((1.0 + phi.cos()) / 2.0).max(floor);
        let q0 = ((1.0 - phi.cos()) / 2.0).max(floor);
        let p1 = ((1.0 - phi.sin()) / 2.0).max(floor);
        let q1 = ((1.0 + phi.sin()) / 2.0).max(floor);
        self.k0 * p0.ln() + (self.m0 - self.k0) * q0.ln() + self.k1 * p1.ln()
            + (self.m1 - self.k1) * q1.ln()
    }

    fn d_log_likelihood(&self, phi: f64) -> (f64, f64) {
        let (s, c) = phi.sin_cos();
        let p0 = (1.0 + c) / 2.0;
        let q0 = (1.0 - c) / 2.0;
        let p1 = (1.0 - s) / 2.0;
        let q1 = (1.0 + s) / 2.0;
        let g0 = safe_ratio(self.k0, p0) - safe_ratio(self.m0 - self.k0, q0);
        let g1 = safe_ratio(self.k1, p1) - safe_ratio(self.m1 - self.k1, q1);
        let dp0 = -s / 2.0;
        let dp1 = -c / 2.0;
        let grad = dp0 * g0 + dp1 * g1;
        let h0 = safe_ratio(self.k0, p0 * p0) + safe_ratio(self.m0 - self.k0, q0 * q0);
        let h1 = safe_ratio(self.k1, p1 * p1) + safe_ratio(self.m1 - self.k1, q1 * q1);
        let hess = (-c / 2.0) * g0 + (s / 2.0) * g1 - dp0 * dp0 * h0 - dp1 * dp1 * h1;
        (grad, hess)
    }

    fn total(&self) -> f64 {
        self.m0 + self.m1
    }

    fn degenerate(&self) -> bool {
        (self.k0 == 0.0 || self.k0 == self.m0) && (self.k1 == 0.0 || self.k1 == self.m1)
    }
}

fn safe_ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Newton polish of a stationary point; keeps the start if the polish fails.
fn newton_polish(counts: &QuadratureCounts, start: f64) -> f64 {
    let mut phi = start;
    for _ in 0..40 {
        let (grad, hess) = counts.d_log_likelihood(phi);
        if hess >= 0.0 {
            return phi;
        }
        let step = (grad / hess).clamp(-0.05, 0.05);
        phi -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    if counts.log_likelihood(phi) >= counts.log_likelihood(start) {
        phi
    } else {
        start
    }
}

fn golden_max(counts: &QuadratureCounts, mut a: f64, mut b: f64) -> f64 {
    const G: f64 = 0.618_033_988_749_894_8;
    let mut c = b - G * (b - a);
    let mut d = a + G * (b - a);
    let mut fc = counts.log_likelihood(c);
    let mut fd = counts.log_likelihood(d);
    for _ in 0..90 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - G * (b - a);
            fc = counts.log_likelihood(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + G * (b - a);
            fd = counts.log_likelihood(d);
        }
    }
    (a + b) / 2.0
}

/// Maximum-likelihood estimate of Φ ∈ [−π, π). `tie_prior` breaks exact ties
/// (prefer the candidate closest to the prior prediction; with no prior the
/// smaller |Φ| wins). Returns (Φ̂, observed information, degenerate-record
/// flag).
fn phase_mle(counts: &QuadratureCounts, tie_prior: Option<f64>) -> (f64, f64, bool) {
    const GRID: usize = 1024;
    let cell = TAU / GRID as f64;

    // moment initializer: <sigma_z>_0 estimates cos, <sigma_z>_1 estimates -sin
    let mean0 = 2.0 * counts.k0 / counts.m0 - 1.0;
    let mean1 = 2.0 * counts.k1 / counts.m1 - 1.0;
    let moment = (-mean1).atan2(mean0);

    let mut best_phi = newton_polish(counts, moment);
    let best_ll = counts.log_likelihood(best_phi);

    let mut grid_best = 0usize;
    let mut grid_ll = f64::NEG_INFINITY;
    for k in 0..GRID {
        let phi = -PI + k as f64 * cell;
        let ll = counts.log_likelihood(phi);
        if ll > grid_ll {
            grid_ll = ll;
            grid_best = k;
        }
    }
    let center = -PI + grid_best as f64 * cell;
    let refined = newton_polish(counts, golden_max(counts, center - cell, center + cell));
    let refined_ll = counts.log_likelihood(refined);

    let tol = 1e-9 * (1.0 + best_ll.abs());
    if refined_ll > best_ll + tol {
        best_phi = refined;
    } else if (refined_ll - best_ll).abs() <= tol {
        let pref = |phi: f64| match tie_prior {
            Some(p) => wrap_phase(phi - p).abs(),
            None => phi.abs(),
        };
        if pref(refined) < pref(best_phi) {
            best_phi = refined;
        }
    }

    let best_phi = wrap_phase(best_phi);
    let (_, hess) = counts.d_log_likelihood(best_phi);
    let info = if hess < 0.0 { -hess } else { counts.total() };
    (best_phi, info, counts.degenerate())
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

/// Result of one phase estimate.
#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub theta_hat: f64,
    /// 1/√(observed Fisher information), mapped to θ.
    pub stderr: f64,
    /// Photon passages consumed (QND accounting: the field plus one passage
    /// per probe).
    pub resources_used: u64,
    /// Cramér–Rao value applicable to the record sizes used.
    pub bound: f64,
    /// Both quadratures came back single-valued; the estimate cannot pin the
    /// fringe and should be treated as a warning, not an error.
    pub ambiguous: bool,
}

/// Maximum-likelihood θ estimate from a pair of quadrature records
/// (φ_R = 0 and φ_R = π/2) taken on a Fock field of `n_photons`.
pub fn estimate_phase(
    quad0: &OutcomeRecord,
    quad90: &OutcomeRecord,
    n_photons: usize,
) -> Result<EstimateReport> {
    let total = quad0.len() + quad90.len();
    if total < 10 {
        return Err(Error::InsufficientData { got: total, need: 10 });
    }
    if quad0.is_empty() || quad90.is_empty() {
        return Err(Error::InsufficientData { got: 0, need: 1 });
    }
    let counts = QuadratureCounts::from_records(quad0, quad90);
    let (phi, info, ambiguous) = phase_mle(&counts, None);
    let mult = n_photons as f64 + 0.5;
    Ok(EstimateReport {
        theta_hat: phi / mult,
        stderr: 1.0 / (info.max(1.0)).sqrt() / mult,
        resources_used: (n_photons + total) as u64,
        bound: crb_noiseless(n_photons, total),
        ambiguous,
    })
}

// ---------------------------------------------------------------------------
// adaptive recentering under loss
// ---------------------------------------------------------------------------

/// Two-step adaptive estimate at a lossy working point. The information of
/// the σ_z readout peaks as the interaction phase approaches zero
/// ([`crate::damping::optimal_qfi`]), so a tenth of the probe budget first
/// locates θ coarsely (moment estimator; its phase is visibility-free), a
/// compensating phase −θ̂₀ of known magnitude recenters the channel, and the
/// remaining probes estimate the small residual where the per-probe
/// information sits at F_o.
///
/// The compensation is modeled as acting on the interaction phase itself and
/// η is taken as known (from T_C and the elapsed time). Valid for η < 1/2
/// and θ inside the principal fringe of the accumulated phase.
pub fn two_step_adaptive(
    rng: &mut CounterRng,
    n_photons: usize,
    eta: f64,
    theta_true: f64,
    m_total: usize,
) -> Result<EstimateReport> {
    if m_total < 40 {
        return Err(Error::InsufficientData { got: m_total, need: 40 });
    }
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta = {eta} outside [0, 0.5)")));
    }
    // outcome probability of the lossy channel at quadrature φ_R
    let p_plus = |theta: f64, phase: f64| -> f64 {
        let probe = crate::damping::lossy_probe(n_photons, eta, theta).probe;
        let chi = probe.interference() * C64::new(0.0, phase).exp();
        ((1.0 + chi.re) / 2.0).clamp(0.0, 1.0)
    };
    let acc = |theta: f64| n_photons as f64 * crate::damping::lossy_probe(n_photons, eta, theta).phi;
    // the coarse pass reads the accumulated phase only mod 2π; keep the
    // working point far enough inside the fringe that its sampling noise
    // cannot wrap past ±π
    if acc(theta_true).abs() >= 0.8 * PI {
        return Err(Error::InvalidParameter(format!(
            "theta = {theta_true} too close to the fringe edge of the {n_photons}-photon channel"
        )));
    }
    let invert = |phi_target: f64| -> f64 {
        // acc is monotone increasing over the fringe for eta < 1/2
        let (mut lo, mut hi) = (-PI, PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if acc(mid) < phi_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let draw = |rng: &mut CounterRng, p: f64, m: usize| -> f64 {
        let mut k = 0usize;
        for _ in 0..m {
            if rng.bernoulli(p) {
                k += 1;
            }
        }
        k as f64
    };

    // coarse pass: visibility-free moment estimate of the accumulated phase
    let m_coarse = m_total / 10;
    let m_fine = m_total - m_coarse;
    let (ma, mb) = (m_coarse / 2, m_coarse - m_coarse / 2);
    let ka = draw(rng, p_plus(theta_true, 0.0), ma);
    let kb = draw(rng, p_plus(theta_true, FRAC_PI_2), mb);
    let mean0 = 2.0 * ka / ma as f64 - 1.0;
    let mean1 = 2.0 * kb / mb as f64 - 1.0;
    let theta_coarse = invert((-mean1).atan2(mean0));

    // recentered pass at the residual, read out at mid-fringe (φ_R = π/2):
    // with the physical phase recentered the visibility is back at one and
    // the −sin response is linear with the full slope (1−η)N + 1/2, so the
    // maximum-likelihood estimate sits in the healthy asymptotic regime
    let residual_true = theta_true - theta_coarse;
    let kb = draw(rng, p_plus(residual_true, FRAC_PI_2), m_fine);
    let ll = |theta: f64| -> f64 {
        let floor = 1e-300;
        let p1 = p_plus(theta, FRAC_PI_2).max(floor).min(1.0 - 1e-16);
        kb * p1.ln() + (m_fine as f64 - kb) * (1.0 - p1).ln()
    };
    // bracket: the monotone window of the mid-fringe response
    let slope = (1.0 - eta) * n_photons as f64 + 0.5;
    let half_width = 0.9 * FRAC_PI_2 / slope;
    let grid = 128;
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..=grid {
        let th = -half_width + 2.0 * half_width * k as f64 / grid as f64;
        let v = ll(th);
        if v > best.1 {
            best = (k, v);
        }
    }
    let cell = 2.0 * half_width / grid as f64;
    let center = -half_width + best.0 as f64 * cell;
    let (mut a, mut b) = (center - cell, center + cell);
    const G: f64 = 0.618_033_988_749_894_8;
    let (mut c, mut d) = (b - G * (b - a), a + G * (b - a));
    let (mut fc, mut fd) = (ll(c), ll(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - G * (b - a);
            fc = ll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + G * (b - a);
            fd = ll(d);
        }
    }
    let residual_hat = 0.5 * (a + b);
    let theta_hat = theta_coarse + residual_hat;

    // observed information from a central second difference of the residual
    // log-likelihood
    let h = 1e-5;
    let curv = (ll(residual_hat + h) - 2.0 * ll(residual_hat) + ll(residual_hat - h)) / (h * h);
    let info = if curv < 0.0 { -curv } else { m_fine as f64 * slope * slope };

    let f_o = crate::damping::optimal_qfi(n_photons, eta);
    let ambiguous = kb == 0.0 || kb == m_fine as f64;
    Ok(EstimateReport {
        theta_hat,
        stderr: 1.0 / info.max(1.0).sqrt(),
        resources_used: (n_photons + m_total) as u64,
        bound: 1.0 / (m_total as f64 * f_o).sqrt(),
        ambiguous,
    })
}

// ---------------------------------------------------------------------------
// cascade
// ---------------------------------------------------------------------------

/// Configuration of the cascaded estimation run.
#[derive(Clone, Copy, Debug)]
pub struct CascadeConfig {
    /// Number of stages; stage j probes the Fock state with 2^j photons.
    pub levels: usize,
    /// Probes per quadrature per stage (each stage fires 2·m probes).
    pub trials_per_stage: usize,
    /// Phase to simulate, in [−π, π).
    pub theta_true: f64,
    /// Include the +θ/2 term of the dispersive shift in stage likelihoods and
    /// multipliers (2^j + 1/2). With `false` the idealized integer ladder 2^j
    /// is used instead.
    pub use_half_term: bool,
}

impl CascadeConfig {
    pub fn new(levels: usize, trials_per_stage: usize, theta_true: f64) -> Result<Self> {
        if levels == 0 || levels > 32 {
            return Err(Error::InvalidParameter("levels must be in 1..=32".into()));
        }
        if trials_per_stage == 0 {
            return Err(Error::InvalidParameter("trials_per_stage must be >= 1".into()));
        }
        if !(-PI..PI).contains(&theta_true) {
            return Err(Error::InvalidParameter(format!(
                "theta_true = {theta_true} outside [-pi, pi)"
            )));
        }
        Ok(Self { levels, trials_per_stage, theta_true, use_half_term: true })
    }

    pub fn idealized(mut self) -> Self {
        self.use_half_term = false;
        self
    }

    pub fn multipliers(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|j| {
                let base = (1u64 << j) as f64;
                if self.use_half_term {
                    base + 0.5
                } else {
                    base
                }
            })
            .collect()
    }

    /// m · Σ 2^j photon passages.
    pub fn total_resource(&self) -> u64 {
        self.trials_per_stage as u64 * ((1u64 << self.levels) - 1)
    }
}

/// Per-stage bookkeeping of a cascade run.
#[derive(Clone, Debug)]
pub struct StageEstimate {
    pub level: usize,
    pub photons: u64,
    pub multiplier: f64,
    /// wrap(multiplier · θ_true) — what the stage should have seen.
    pub phase_true: f64,
    pub phase_hat: f64,
    /// Circular estimation error of this stage.
    pub error: f64,
    pub ambiguous: bool,
}

/// Outcome of one cascade run.
#[derive(Clone, Debug)]
pub struct CascadeOutcome {
    pub estimate: EstimateReport,
    pub stages: Vec<StageEstimate>,
}

/// Simulates two quadrature records against the stage field and estimates its
/// wrapped accumulated phase.
fn run_stage(
    rng: &mut CounterRng,
    multiplier: f64,
    photons: u64,
    theta: f64,
    m: usize,
    use_half_term: bool,
    tie_prior: Option<f64>,
) -> Result<(f64, bool)> {
    let mut k = [0usize; 2];
    if use_half_term {
        // authentic channel: probes cross a Fock field of 2^j photons
        let dim = photons as usize + 1;
        let state = CavityPureState::fock(photons as usize, dim)?;
        for (qi, phase) in [0.0, FRAC_PI_2].into_iter().enumerate() {
            let params = RamseyParams::with_ramsey_phase(theta, phase)?;
            let mut s = state.clone();
            for _ in 0..m {
                let (outcome, post) = sample_outcome(rng, &s, &params);
                s = post;
                if outcome == Outcome::Plus {
                    k[qi] += 1;
                }
            }
        }
    } else {
        // idealized ladder: Bernoulli draws with p = cos²((2^j θ + φ_R)/2)
        for (qi, phase) in [0.0, FRAC_PI_2].into_iter().enumerate() {
            let p_plus = (((multiplier * theta + phase) / 2.0).cos()).powi(2);
            for _ in 0..m {
                if rng.bernoulli(p_plus) {
                    k[qi] += 1;
                }
            }
        }
    }
    let counts = QuadratureCounts {
        k0: k[0] as f64,
        m0: m as f64,
        k1: k[1] as f64,
        m1: m as f64,
    };
    let (phi, _, ambiguous) = phase_mle(&counts, tie_prior);
    Ok((phi, ambiguous))
}

/// Full cascade: per stage j, 2·m probe outcomes against the 2^j-photon field
/// (two quadratures), stage-phase estimation, then successive refinement.
///
/// With the physical (2^j + 1/2) multipliers no single stage has multiplier 1,
/// so the refinement is seeded by the vernier difference
/// wrap(Θ̂₁ − Θ̂₀) — an estimate of θ with unit effective multiplier — and the
/// 2π branch of the seed is resolved by the wrap-residual score.
pub fn cascade_run(rng: &mut CounterRng, cfg: &CascadeConfig) -> Result<CascadeOutcome> {
    let mults = cfg.multipliers();
    let m = cfg.trials_per_stage;
    let mut estimates = Vec::with_capacity(cfg.levels);
    let mut stages = Vec::with_capacity(cfg.levels);
    let mut running: Option<f64> = None;

    for (j, &mult) in mults.iter().enumerate() {
        let photons = 1u64 << j;
        let tie_prior = running.map(|t| wrap_phase(mult * t));
        let (phi, ambiguous) =
            run_stage(rng, mult, photons, cfg.theta_true, m, cfg.use_half_term, tie_prior)?;
        let phase_true = wrap_phase(mult * cfg.theta_true);
        stages.push(StageEstimate {
            level: j,
            photons,
            multiplier: mult,
            phase_true,
            phase_hat: phi,
            error: wrap_phase(phi - phase_true),
            ambiguous,
        });
        estimates.push(phi);
        // coarse running value for tie-breaking only
        if j == 0 && !cfg.use_half_term {
            running = Some(phi / mult);
        } else if j == 1 && cfg.use_half_term {
            running = Some(wrap_phase(estimates[1] - estimates[0]));
        } else if let Some(t) = running {
            running = Some(t + wrap_phase(phi - mult * t) / mult);
        }
    }

    let theta_hat = if cfg.use_half_term {
        if cfg.levels == 1 {
            // single half-integer stage: unambiguous only for |1.5 θ| < π
            wrap_phase(estimates[0]) / mults[0]
        } else {
            let init = wrap_phase(estimates[1] - estimates[0]);
            refine_with_branch(init, &estimates, &mults)
        }
    } else {
        reconstruct_theta(&estimates, &mults)
    };

    let last_mult = mults[cfg.levels - 1];
    let bound = 1.0 / ((m as f64).sqrt() * ((1u64 << (cfg.levels - 1)) as f64 + 0.5));
    let ambiguous = stages.iter().any(|s| s.ambiguous);
    Ok(CascadeOutcome {
        estimate: EstimateReport {
            theta_hat: wrap_phase(theta_hat),
            stderr: 1.0 / ((2.0 * m as f64).sqrt() * last_mult),
            resources_used: cfg.total_resource(),
            bound,
            ambiguous,
        },
        stages,
    })
}

/// Seeded ensemble of cascade runs over the given true phases; repetition i
/// uses the derived stream (master_seed, i), so results are independent of
/// the number of worker threads.
pub fn cascade_ensemble(
    master_seed: u64,
    levels: usize,
    trials_per_stage: usize,
    use_half_term: bool,
    thetas: &[f64],
) -> Result<Vec<CascadeOutcome>> {
    thetas
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut cfg = CascadeConfig::new(levels, trials_per_stage, theta)?;
            cfg.use_half_term = use_half_term;
            let mut rng = CounterRng::stream(master_seed, i as u64);
            cascade_run(&mut rng, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wrap_phase_conventions() {
        assert_eq!(wrap_phase(0.0), 0.0);
        assert_eq!(wrap_phase(-PI), -PI);
        assert_eq!(wrap_phase(PI), -PI);
        assert_abs_diff_eq!(wrap_phase(4.0), 4.0 - TAU, epsilon = 1e-12);
        // idempotent and 2π-periodic on a grid
        for k in -40..40 {
            let x = 0.37 * k as f64;
            let w = wrap_phase(x);
            assert!((-PI..PI).contains(&w));
            assert_abs_diff_eq!(wrap_phase(w), w, epsilon = 1e-12);
            assert_abs_diff_eq!(wrap_phase(x + 3.0 * TAU), w, epsilon = 1e-9);
        }
    }

    #[test]
    fn crb_values() {
        assert_abs_diff_eq!(crb_noiseless(8, 1000), 3.7203e-3, epsilon = 1e-6);
        assert_abs_diff_eq!(crb_noiseless(8, 1), 1.0 / 8.5, epsilon = 1e-15);
    }

    #[test]
    fn qnd_advantage_over_entangled_benchmark() {
        // at a common total resource the ratio tends to sqrt(N)/(N + 1/2)
        let n = 8;
        let r = resource_comparison(n, 100_000_000);
        let ratio = r.qnd / r.noon;
        let expect = (n as f64).sqrt() / (n as f64 + 0.5);
        assert!((ratio - expect).abs() < 1e-3, "{ratio} vs {expect}");
        // which approaches 1/sqrt(N) for large N
        let big = resource_comparison(1000, 100_000_000);
        assert!((big.qnd / big.noon * (1000.0_f64).sqrt() - 1.0).abs() < 0.01);
    }

    #[test]
    fn coherent_average_information_closed_form_vs_poisson_sum() {
        // brute Poisson sum oracle, truncated at tail < 1e-12
        let brute = |nbar: f64| -> f64 {
            let mut term = (-nbar).exp();
            let mut sum = term * 0.25;
            let mut i = 0usize;
            loop {
                i += 1;
                term *= nbar / i as f64;
                sum += term * (i as f64 + 0.5).powi(2);
                if term < 1e-18 && i as f64 > nbar + 10.0 {
                    break;
                }
            }
            sum
        };
        for nbar in [0.0, 0.5, 1.0, 3.0, 9.0] {
            assert_abs_diff_eq!(fisher_avg_coherent(nbar), brute(nbar), epsilon = 1e-10);
        }
        assert_abs_diff_eq!(fisher_avg_coherent(0.0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(fisher_avg_coherent(3.0), 15.25, epsilon = 1e-12);
        assert_abs_diff_eq!(fisher_avg_coherent(9.0), 99.25, epsilon = 1e-12);
    }

    #[test]
    fn stage_phase_values() {
        let phases = stage_phases(2.0, 3);
        assert_abs_diff_eq!(phases[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(phases[1], -2.2832, epsilon = 1e-4);
        assert_abs_diff_eq!(phases[2], 1.7168, epsilon = 1e-4);

        assert!(stage_phases(0.0, 5).iter().all(|&p| p == 0.0));
        assert_eq!(stage_phases(-PI, 1)[0], -PI);
    }

    #[test]
    fn reconstruct_exact_round_trip() {
        for levels in 1..=12 {
            let mults: Vec<f64> = (0..levels).map(|j| (1u64 << j) as f64).collect();
            for k in 0..200 {
                let theta = -PI + TAU * (k as f64 + 0.5) / 200.0;
                let est = stage_phases(theta, levels);
                let got = reconstruct_theta(&est, &mults);
                assert!(
                    (got - theta).abs() < 1e-12,
                    "L={levels} theta={theta}: got {got}"
                );
            }
        }
    }

    #[test]
    fn reconstruct_contracts_stage_errors() {
        let theta = 2.0;
        let mults = [1.0, 2.0, 4.0];
        let est: Vec<f64> = mults.iter().map(|m| wrap_phase(m * theta) + 0.4).collect();
        let got = reconstruct_theta(&est, &mults);
        assert!((got - theta).abs() <= 0.4 / 4.0 + 1e-12, "err {}", (got - theta).abs());
    }

    #[test]
    fn reconstruct_zero() {
        let mults = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(reconstruct_theta(&[0.0; 4], &mults), 0.0);
    }

    #[test]
    fn half_term_round_trip_via_vernier() {
        let mults: Vec<f64> = (0..6).map(|j| (1u64 << j) as f64 + 0.5).collect();
        for k in 0..400 {
            let theta = -PI + TAU * (k as f64 + 0.5) / 400.0;
            let est: Vec<f64> = mults.iter().map(|m| wrap_phase(m * theta)).collect();
            let init = wrap_phase(est[1] - est[0]);
            let got = refine_with_branch(init, &est, &mults);
            assert!((got - theta).abs() < 1e-12, "theta {theta}: got {got}");
        }
    }

    #[test]
    fn mle_exact_at_clean_points() {
        // all +1 in quadrature 0, balanced in quadrature pi/2 → exactly zero
        let counts = QuadratureCounts { k0: 500.0, m0: 500.0, k1: 250.0, m1: 500.0 };
        let (phi, _, ambiguous) = phase_mle(&counts, None);
        assert_eq!(phi, 0.0);
        assert!(!ambiguous);
    }

    #[test]
    fn mle_recovers_phase_within_three_sigma() {
        let phi_true: f64 = 0.425;
        let m = 20_000usize;
        let mut rng = CounterRng::new(31);
        let mut k0 = 0.0;
        let mut k1 = 0.0;
        let p0 = (1.0 + phi_true.cos()) / 2.0;
        let p1 = (1.0 - phi_true.sin()) / 2.0;
        for _ in 0..m {
            if rng.bernoulli(p0) {
                k0 += 1.0;
            }
            if rng.bernoulli(p1) {
                k1 += 1.0;
            }
        }
        let counts = QuadratureCounts { k0, m0: m as f64, k1, m1: m as f64 };
        let (phi, info, _) = phase_mle(&counts, None);
        let sigma = 1.0 / (2.0 * m as f64).sqrt();
        assert!((phi - phi_true).abs() < 3.0 * sigma, "{phi} vs {phi_true}");
        assert!((info - 2.0 * m as f64).abs() / (2.0 * m as f64) < 0.2);
    }

    #[test]
    fn estimate_phase_report_fields() {
        let mut q0 = OutcomeRecord::new(0.05);
        let mut q1 = OutcomeRecord::new(0.05);
        let phi: f64 = 8.5 * 0.05;
        let mut rng = CounterRng::new(11);
        for _ in 0..2000 {
            q0.push(Outcome::from_sign(if rng.bernoulli((1.0 + phi.cos()) / 2.0) { 1 } else { -1 }).unwrap());
            q1.push(Outcome::from_sign(if rng.bernoulli((1.0 - phi.sin()) / 2.0) { 1 } else { -1 }).unwrap());
        }
        let rep = estimate_phase(&q0, &q1, 8).unwrap();
        assert!((rep.theta_hat - 0.05).abs() < 3.0 * crb_noiseless(8, 4000));
        assert_abs_diff_eq!(rep.bound, crb_noiseless(8, 4000), epsilon = 1e-15);
        assert_eq!(rep.resources_used, 8 + 4000);
        assert!(!rep.ambiguous);
        assert!(rep.stderr > 0.0);
    }

    #[test]
    fn estimate_phase_needs_data() {
        let q0 = OutcomeRecord::new(0.1);
        let q1 = OutcomeRecord::new(0.1);
        assert!(matches!(
            estimate_phase(&q0, &q1, 8),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn degenerate_records_flagged_not_fatal() {
        let mut q0 = OutcomeRecord::new(0.0);
        let mut q1 = OutcomeRecord::new(0.0);
        for _ in 0..50 {
            q0.push(Outcome::Plus);
            q1.push(Outcome::Plus);
        }
        let rep = estimate_phase(&q0, &q1, 8).unwrap();
        assert!(rep.ambiguous);
    }

    #[test]
    fn adaptive_recentering_attains_the_lossy_optimum() {
        let (n, eta, m_total) = (8usize, 0.2f64, 2000usize);
        let theta_true = 0.35;
        let reps = 600;
        let ests: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = CounterRng::stream(7, r as u64);
                two_step_adaptive(&mut rng, n, eta, theta_true, m_total)
                    .unwrap()
                    .theta_hat
            })
            .collect();
        let mean = ests.iter().sum::<f64>() / reps as f64;
        let sd = (ests.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (reps - 1) as f64)
            .sqrt();
        let bound = 1.0 / (m_total as f64 * crate::damping::optimal_qfi(n, eta)).sqrt();
        assert!(sd / bound < 1.25, "sd/bound = {}", sd / bound);
        assert!((mean - theta_true).abs() < 1e-3, "bias {}", mean - theta_true);

        // at this working point the fixed-phase information has dropped to
        // F(0.35) ~ 30; recentering must beat the fixed-point bound
        let fixed_bound =
            1.0 / (m_total as f64 * crate::damping::fisher_info_lossy(n, eta, theta_true)).sqrt();
        assert!(
            sd < 0.9 * fixed_bound,
            "sd {sd} vs fixed-point bound {fixed_bound}"
        );
    }

    #[test]
    fn adaptive_recentering_guards() {
        let mut rng = CounterRng::new(1);
        // outside the principal fringe of the 8-photon channel
        assert!(matches!(
            two_step_adaptive(&mut rng, 8, 0.2, 1.9, 2000),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            two_step_adaptive(&mut rng, 8, 0.6, 0.1, 2000),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            two_step_adaptive(&mut rng, 8, 0.2, 0.1, 20),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn cascade_zero_phase() {
        let cfg = CascadeConfig::new(3, 200, 0.0).unwrap();
        let mut rng = CounterRng::new(17);
        let out = cascade_run(&mut rng, &cfg).unwrap();
        assert!(out.estimate.theta_hat.abs() < 3.0 * out.estimate.stderr + 1e-12);
        assert_eq!(out.estimate.resources_used, 200 * 7);
    }

    #[test]
    fn cascade_recovers_generic_phase() {
        let cfg = CascadeConfig::new(4, 400, 1.9).unwrap();
        let mut rng = CounterRng::new(5);
        let out = cascade_run(&mut rng, &cfg).unwrap();
        assert!(
            (out.estimate.theta_hat - 1.9).abs() < 5.0 * out.estimate.stderr,
            "got {} ± {}",
            out.estimate.theta_hat,
            out.estimate.stderr
        );
        assert_eq!(out.stages.len(), 4);
        assert_eq!(out.stages[3].photons, 8);
    }

    #[test]
    fn cascade_idealized_ladder() {
        let cfg = CascadeConfig::new(4, 400, -2.5).unwrap().idealized();
        let mut rng = CounterRng::new(23);
        let out = cascade_run(&mut rng, &cfg).unwrap();
        assert!((out.estimate.theta_hat - -2.5).abs() < 5.0 * out.estimate.stderr);
    }

    #[test]
    fn cascade_ensemble_deterministic_and_thread_independent() {
        let thetas: Vec<f64> = (0..12).map(|k| -3.0 + 0.5 * k as f64).collect();
        let a = cascade_ensemble(400, 3, 50, true, &thetas).unwrap();
        let b = cascade_ensemble(400, 3, 50, true, &thetas).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.estimate.theta_hat.to_bits(), y.estimate.theta_hat.to_bits());
        }
    }

    #[test]
    fn monotone_improvement_with_levels() {
        // average over a fixed theta grid: RMS error strictly decreases with L
        let thetas: Vec<f64> = (0..40).map(|k| -3.0 + 6.0 * (k as f64 + 0.5) / 40.0).collect();
        let mut prev = f64::INFINITY;
        for levels in [2usize, 3, 4] {
            let outs = cascade_ensemble(77, levels, 200, true, &thetas).unwrap();
            let rms = (outs
                .iter()
                .zip(&thetas)
                .map(|(o, &t)| wrap_phase(o.estimate.theta_hat - t).powi(2))
                .sum::<f64>()
                / thetas.len() as f64)
                .sqrt();
            assert!(rms < prev, "L={levels}: rms {rms} vs prev {prev}");
            prev = rms;
        }
    }
}
