//! Cavity damping models and the information budget of a lossy probe.
//!
//! The field couples to a thermal reservoir with damping rate Γ_C = 1/T_C and
//! mean blackbody occupation n_b. The diagonal of the master equation obeys
//! the rate equations
//!
//! ```text
//! dq_n/dt = Γ[(n_b+1)((n+1) q_{n+1} − n q_n) + n_b(n q_{n−1} − (n+1) q_n)]
//! ```
//!
//! integrated by [`evolve_rate_equations`]; the closed-form solution for an
//! initial Fock state |N⟩ is [`exact_populations`], and for n_b = 0 both
//! reduce to the binomial loss model [`binomial_populations`] with loss
//! intensity η(t) = 1 − e^{−t/T_C}.
//!
//! Under binomial loss the probe atom's reduced state has interference term
//! r^N e^{iNφ} with
//!
//! ```text
//! r² = 1 − 4η(1−η) sin²(θ/2),
//! φ  = θ/(2N) + arg[η + (1−η) e^{iθ}],
//! ```
//!
//! from which [`fisher_info_lossy`] and [`qfi_lossy`] give the classical and
//! quantum Fisher information in closed form. Both peak, as θ → 0, at
//!
//! ```text
//! F_o = [(1−η)N + 1/2]² + η(1−η)N
//! ```
//!
//! ([`optimal_qfi`]); the advantage horizon F_o(η(t)) ≥ N + 1/2 gives the
//! usable time and trial budget ([`advantage_time`], [`max_useful_trials`]),
//! and [`average_qfi`] averages F_o over the first m probe slots.

use crate::error::{Error, Result};
use crate::fock::PhotonDistribution;
use crate::ramsey::{probe_from_interference, ProbeState};

/// Reservoir coupling of the cavity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampingParams {
    /// Cavity damping time T_C, s.
    pub t_c: f64,
    /// Mean blackbody photon number of the reservoir.
    pub n_b: f64,
    /// Interval between successive probe atoms, s.
    pub tau_a: f64,
}

impl DampingParams {
    pub fn new(t_c: f64, n_b: f64, tau_a: f64) -> Result<Self> {
        if !(t_c > 0.0) || !(tau_a > 0.0) || n_b < 0.0 {
            return Err(Error::InvalidParameter(
                "need t_c > 0, tau_a > 0, n_b >= 0".into(),
            ));
        }
        Ok(Self { t_c, n_b, tau_a })
    }

    /// Published ultrahigh-finesse working point: T_C = 0.130 s, n_b = 0.05
    /// at 0.8 K, probes every 82 µs.
    pub fn lab_defaults() -> Self {
        Self { t_c: 0.130, n_b: 0.05, tau_a: 82e-6 }
    }

    /// Damping rate Γ_C = 1/T_C, 1/s.
    pub fn gamma(&self) -> f64 {
        1.0 / self.t_c
    }
}

/// Photon-loss intensity η(t) = 1 − e^{−t/T_C}.
pub fn eta_of_t(t: f64, d: &DampingParams) -> f64 {
    debug_assert!(t >= 0.0);
    -(-t / d.t_c).exp_m1()
}

/// Binomial loss model: each of N photons survives with probability 1 − η,
/// so q_k = C(N,k) (1−η)^k η^{N−k}, k = 0..N.
pub fn binomial_populations(n_photons: usize, eta: f64) -> Result<PhotonDistribution> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta = {eta} outside [0, 1]")));
    }
    let n = n_photons;
    let mut probs = vec![0.0; n + 1];
    for (k, q) in probs.iter_mut().enumerate() {
        *q = ln_choose(n, k).exp()
            * pow_checked(1.0 - eta, k as i32)
            * pow_checked(eta, (n - k) as i32);
    }
    PhotonDistribution::new(normalize(probs))
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

// 0^0 = 1 for the boundary terms of the binomial
fn pow_checked(base: f64, exp: i32) -> f64 {
    if exp == 0 {
        1.0
    } else {
        base.powi(exp)
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// Thermal-reservoir closed form for an initial Fock state |N⟩, on support
/// 0..N+10 (blackbody excitation populates n > N). The distribution is
/// renormalized over the truncated support; the deviation of its raw sum from
/// 1 is available through [`exact_populations_with_norm`]. At n_b = 0 this
/// equals [`binomial_populations`] at η(t) exactly.
pub fn exact_populations(n_photons: usize, t: f64, d: &DampingParams) -> Result<PhotonDistribution> {
    exact_populations_with_norm(n_photons, t, d).map(|(q, _)| q)
}

/// Also returns the raw sum of the closed form before renormalization, a
/// truncation diagnostic.
pub fn exact_populations_with_norm(
    n_photons: usize,
    t: f64,
    d: &DampingParams,
) -> Result<(PhotonDistribution, f64)> {
    if t < 0.0 {
        return Err(Error::InvalidParameter("t must be >= 0".into()));
    }
    let big_n = n_photons;
    let dim = big_n + 11;
    let eta = eta_of_t(t, d);
    let survival = 1.0 - eta;
    let nb = d.n_b;

    let mut probs = vec![0.0; dim];
    for (n, q) in probs.iter_mut().enumerate() {
        let mut sum = 0.0;
        for k in 0..=n.min(big_n) {
            let ln_comb = ln_choose(big_n, k) + ln_choose(n, k);
            let term = ln_comb.exp()
                * pow_checked(nb, (n - k) as i32)
                * pow_checked(1.0 + nb, (big_n - k) as i32)
                * pow_checked(survival, k as i32)
                * pow_checked(eta, (big_n + n - 2 * k) as i32);
            sum += term;
        }
        *q = sum / (1.0 + nb * eta).powi((big_n + n + 1) as i32);
    }
    let raw_sum: f64 = probs.iter().sum();
    let tail_guess = (raw_sum - 1.0).abs();
    if tail_guess > 1e-6 {
        return Err(Error::TruncationOverflow { tail: tail_guess, limit: 1e-6 });
    }
    Ok((PhotonDistribution::new(normalize(probs))?, raw_sum))
}

/// Fixed-step RK4 integration of the diagonal rate equations. The step is at
/// most 1e−4·T_C; the top level is reflecting (no upward flow out of the
/// truncation), which keeps the generator exactly probability-conserving.
pub fn evolve_rate_equations(
    q0: &PhotonDistribution,
    t: f64,
    d: &DampingParams,
) -> Result<PhotonDistribution> {
    if t < 0.0 {
        return Err(Error::InvalidParameter("t must be >= 0".into()));
    }
    if t == 0.0 {
        return Ok(q0.clone());
    }
    let dim = q0.dim();
    let gamma = d.gamma();
    let nb = d.n_b;

    let rhs = |q: &[f64], out: &mut [f64]| {
        for n in 0..dim {
            let nf = n as f64;
            let down = (nb + 1.0)
                * ((nf + 1.0) * if n + 1 < dim { q[n + 1] } else { 0.0 } - nf * q[n]);
            let up_in = nb * nf * if n > 0 { q[n - 1] } else { 0.0 };
            let up_out = if n + 1 < dim { nb * (nf + 1.0) * q[n] } else { 0.0 };
            out[n] = gamma * (down + up_in - up_out);
        }
    };

    let max_step = 1e-4 * d.t_c;
    let steps = (t / max_step).ceil() as usize;
    let dt = t / steps as f64;

    let mut q: Vec<f64> = q0.probs().to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for _ in 0..steps {
        rhs(&q, &mut k1);
        for n in 0..dim {
            tmp[n] = q[n] + 0.5 * dt * k1[n];
        }
        rhs(&tmp, &mut k2);
        for n in 0..dim {
            tmp[n] = q[n] + 0.5 * dt * k2[n];
        }
        rhs(&tmp, &mut k3);
        for n in 0..dim {
            tmp[n] = q[n] + dt * k3[n];
        }
        rhs(&tmp, &mut k4);
        for n in 0..dim {
            q[n] += dt / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
        }
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::TruncationOverflow { tail: (total - 1.0).abs(), limit: 1e-9 });
    }
    PhotonDistribution::new(normalize(q))
}

// ---------------------------------------------------------------------------
// lossy probe state and information measures
// ---------------------------------------------------------------------------

/// Closed-form summary of the probe state after crossing a binomially lossy
/// N-photon field.
#[derive(Clone, Debug)]
pub struct LossyProbeSummary {
    /// Visibility base, r² = 1 − 4η(1−η)sin²(θ/2).
    pub r: f64,
    /// Effective phase φ = θ/(2N) + arg[η + (1−η)e^{iθ}].
    pub phi: f64,
    pub probe: ProbeState,
}

/// 1 − r² = 4η(1−η)sin²(θ/2), formed without cancellation.
#[inline]
fn one_minus_r2(eta: f64, theta: f64) -> f64 {
    4.0 * eta * (1.0 - eta) * (theta / 2.0).sin().powi(2)
}

/// arg[η + (1−η)e^{iθ}], continuous on θ ∈ [0, π].
#[inline]
fn loss_arg(eta: f64, theta: f64) -> f64 {
    ((1.0 - eta) * theta.sin()).atan2(eta + (1.0 - eta) * theta.cos())
}

/// dφ/dθ = [η(1−η)cos θ + (1−η)²]/r² + 1/(2N).
#[inline]
fn dphi_dtheta(n: f64, eta: f64, theta: f64) -> f64 {
    let r2 = 1.0 - one_minus_r2(eta, theta);
    (eta * (1.0 - eta) * theta.cos() + (1.0 - eta).powi(2)) / r2 + 1.0 / (2.0 * n)
}

/// Probe state behind a binomially lossy field in (r, φ) form. Agrees with
/// [`crate::ramsey::probe_reduced_state`] on [`binomial_populations`] to
/// 1e−10.
pub fn lossy_probe(n_photons: usize, eta: f64, theta: f64) -> LossyProbeSummary {
    let n = n_photons as f64;
    let u = one_minus_r2(eta, theta);
    let r = (1.0 - u).sqrt();
    let phi = theta / (2.0 * n) + loss_arg(eta, theta);
    let rn = (1.0 - u).powf(n / 2.0);
    let chi = num_complex::Complex64::from_polar(rn, n * phi);
    LossyProbeSummary { r, phi, probe: probe_from_interference(chi) }
}

/// Classical Fisher information of the σ_z readout on the lossy probe:
/// F = {∂_θ[r^N cos(Nφ)]}² / [1 − r^{2N} cos²(Nφ)]. At η = 0 this is
/// (N + 1/2)² for every θ; removable 0/0 points (r → 1 with cos Nφ → ±1)
/// return the θ → 0 limit [`optimal_qfi`].
pub fn fisher_info_lossy(n_photons: usize, eta: f64, theta: f64) -> f64 {
    let n = n_photons as f64;
    let u = one_minus_r2(eta, theta);
    if u == 0.0 {
        // noiseless channel (or θ at a multiple of 2π): flat (N + 1/2)²
        return (n + 0.5).powi(2);
    }
    let ln_r = 0.5 * (-u).ln_1p();
    let r2n = (n * 2.0 * ln_r).exp();
    let dln_r = -eta * (1.0 - eta) * theta.sin() / (1.0 - u);
    let dphi = dphi_dtheta(n, eta, theta);
    let n_phi = theta / 2.0 + n * loss_arg(eta, theta);
    let (s, c) = n_phi.sin_cos();

    // denominator as (1 − r^{2N}) + r^{2N} sin²(Nφ): no cancellation
    let one_minus_r2n = -(n * 2.0 * ln_r).exp_m1();
    let denom = one_minus_r2n + r2n * s * s;
    if denom < 1e-14 {
        return optimal_qfi(n_photons, eta);
    }
    let signal_slope = r2n.sqrt() * n * (dln_r * c - dphi * s);
    signal_slope * signal_slope / denom
}

/// Quantum Fisher information of the lossy probe:
/// F_Q = N² r^{2N} [ (∂_θ ln r)²/(1 − r^{2N}) + (∂_θ φ)² ].
pub fn qfi_lossy(n_photons: usize, eta: f64, theta: f64) -> f64 {
    let n = n_photons as f64;
    let u = one_minus_r2(eta, theta);
    if u == 0.0 {
        return (n + 0.5).powi(2);
    }
    let ln_r = 0.5 * (-u).ln_1p();
    let r2n = (n * 2.0 * ln_r).exp();
    let one_minus_r2n = -(n * 2.0 * ln_r).exp_m1();
    let dln_r = -eta * (1.0 - eta) * theta.sin() / (1.0 - u);
    let dphi = dphi_dtheta(n, eta, theta);
    n * n * r2n * (dln_r * dln_r / one_minus_r2n + dphi * dphi)
}

/// Numeric QFI oracle: spectral decomposition of ρ(θ) plus a two-sided
/// difference ∂ρ ≈ [ρ(θ+δ) − ρ(θ−δ)]/2δ in
/// F_Q = 2 Σ_{ij} |⟨i|∂ρ|j⟩|²/(p_i + p_j). The step must lie in
/// [1e−9, 1e−3].
pub fn qfi_numeric<F>(family: F, theta: f64, dtheta: f64) -> Result<f64>
where
    F: Fn(f64) -> ProbeState,
{
    if !(1e-9..=1e-3).contains(&dtheta) {
        return Err(Error::BadDifferenceStep { step: dtheta, min: 1e-9, max: 1e-3 });
    }
    let rho = family(theta);
    let plus = family(theta + dtheta);
    let minus = family(theta - dtheta);
    let drho = (plus.matrix() - minus.matrix()) / num_complex::Complex64::new(2.0 * dtheta, 0.0);

    let (eigs, vecs) = rho.spectral();
    let mut f = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let p = eigs[i] + eigs[j];
            if p > 1e-12 {
                let elem = (vecs[i].adjoint() * drho * vecs[j])[(0, 0)];
                f += 2.0 * elem.norm_sqr() / p;
            }
        }
    }
    Ok(f)
}

/// Optimal (θ → 0) value of both informations:
/// F_o = [(1−η)N + 1/2]² + η(1−η)N.
pub fn optimal_qfi(n_photons: usize, eta: f64) -> f64 {
    let n = n_photons as f64;
    ((1.0 - eta) * n + 0.5).powi(2) + eta * (1.0 - eta) * n
}

/// Advantage horizon of the damped scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdvantageTime {
    /// Time at which F_o(η(t)) has decayed to N + 1/2, s.
    pub t_star: f64,
    /// Probe slots that fit into the horizon, ⌊t*/τ_a⌋.
    pub m_star: u64,
}

/// Solves F_o(η(t)) = N + 1/2 by bisection to 1e−6 s.
pub fn advantage_time(n_photons: usize, d: &DampingParams) -> Result<AdvantageTime> {
    let target = n_photons as f64 + 0.5;
    let f = |t: f64| optimal_qfi(n_photons, eta_of_t(t, d)) - target;
    if f(0.0) < 0.0 {
        return Err(Error::NoCrossing { t_max: 0.0 });
    }
    let mut hi = d.t_c;
    let mut tries = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoCrossing { t_max: hi });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = 0.5 * (lo + hi);
    Ok(AdvantageTime { t_star, m_star: (t_star / d.tau_a).floor() as u64 })
}

/// Average optimal information over the first m probe slots:
/// F_a(m) = (1/m) Σ_{i=0}^{m−1} F_o(η(i τ_a)).
pub fn average_qfi(n_photons: usize, m: usize, d: &DampingParams) -> f64 {
    assert!(m >= 1, "need at least one trial");
    let sum: f64 = (0..m)
        .map(|i| optimal_qfi(n_photons, eta_of_t(i as f64 * d.tau_a, d)))
        .sum();
    sum / m as f64
}

/// Largest m with F_a(m) ≥ N + 1/2 (F_a is a running mean of a decreasing
/// sequence, hence itself decreasing).
pub fn max_useful_trials(n_photons: usize, d: &DampingParams) -> Result<usize> {
    let target = n_photons as f64 + 0.5;
    let mut sum = 0.0;
    let mut m = 0usize;
    let cap = 100_000_000usize;
    while m < cap {
        sum += optimal_qfi(n_photons, eta_of_t(m as f64 * d.tau_a, d));
        m += 1;
        if sum / (m as f64) < target {
            return Ok(m - 1);
        }
    }
    Err(Error::NoCrossing { t_max: cap as f64 * d.tau_a })
}
