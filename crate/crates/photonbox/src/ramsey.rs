//! The dispersive Ramsey measurement channel.
//!
//! A probe atom prepared in |0⟩ crosses R₁ (Hadamard), the cavity (dispersive
//! unitary U(θ) = exp[iθ(n̂ + 1/2)σ_z/2]), and R₂ (Hadamard), then its σ_z is
//! read out with outcomes i = ±1. For a field with number weights w_n the
//! outcome probabilities are
//!
//! ```text
//! p(i|θ) = Σ_n w_n cos²[(n + 1/2)θ/2 + (i − 1)π/4 + φ_R/2]
//! ```
//!
//! with φ_R a controllable phase offset on the second pulse (φ_R = 0
//! reproduces the bare channel; φ_R = π/2 gives the conjugate quadrature that
//! resolves the sign of θ, since ⟨σ_z⟩ = Σ_n w_n cos[(n + 1/2)θ + φ_R] is even
//! in θ at φ_R = 0). The measurement is QND: Fock states are fixed points of
//! the post-measurement update for every outcome.
//!
//! The interaction phase of a flying atom is fixed by the cavity geometry,
//!
//! ```text
//! θ(v, z) = √(2π) Ω(R)² w cos²(ω_C z / c) / (v δ),   Ω(R) = Ω₀ e^{−R²/w²},
//! ```
//!
//! see [`dispersive_phase`].

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::estimate::wrap_phase;
use crate::fock::{CavityPureState, PhotonDistribution};
use crate::rng::CounterRng;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Detector outcome of the probe σ_z readout; `Plus` means the atom was found
/// in |0⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn sign(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_sign(i: i32) -> Result<Self> {
        match i {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            _ => Err(Error::InvalidParameter(format!("outcome must be ±1, got {i}"))),
        }
    }
}

/// Interaction phase θ and second-pulse offset φ_R of one Ramsey pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RamseyParams {
    theta: f64,
    ramsey_phase: f64,
}

impl RamseyParams {
    /// Bare channel, φ_R = 0.
    pub fn new(theta: f64) -> Result<Self> {
        Self::with_ramsey_phase(theta, 0.0)
    }

    /// φ_R is wrapped into [−π, π).
    pub fn with_ramsey_phase(theta: f64, ramsey_phase: f64) -> Result<Self> {
        if !theta.is_finite() || !ramsey_phase.is_finite() {
            return Err(Error::InvalidParameter("theta and phase must be finite".into()));
        }
        Ok(Self { theta, ramsey_phase: wrap_phase(ramsey_phase) })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn ramsey_phase(&self) -> f64 {
        self.ramsey_phase
    }

    /// Amplitude angle (n + 1/2)θ/2 + (i−1)π/4 + φ_R/2 of outcome `i` on |n⟩.
    #[inline]
    fn angle(&self, n: usize, i: Outcome) -> f64 {
        let offset = match i {
            Outcome::Plus => 0.0,
            Outcome::Minus => -std::f64::consts::FRAC_PI_2,
        };
        (n as f64 + 0.5) * self.theta / 2.0 + offset + self.ramsey_phase / 2.0
    }
}

/// p(i|θ) for a diagonal field. `Plus` and `Minus` sum to 1 exactly (the
/// minus branch is computed as the complement).
pub fn outcome_probability(dist: &PhotonDistribution, p: &RamseyParams, i: Outcome) -> f64 {
    let plus: f64 = dist
        .probs()
        .iter()
        .enumerate()
        .map(|(n, w)| w * p.angle(n, Outcome::Plus).cos().powi(2))
        .sum();
    let plus = plus.clamp(0.0, 1.0);
    match i {
        Outcome::Plus => plus,
        Outcome::Minus => 1.0 - plus,
    }
}

/// p(i|θ) for a pure field, weights |c_n|².
pub fn outcome_probability_pure(state: &CavityPureState, p: &RamseyParams, i: Outcome) -> f64 {
    outcome_probability(&state.photon_distribution(), p, i)
}

/// Post-measurement state and outcome probability:
/// c_n → c_n cos[(n+1/2)θ/2 + (i−1)π/4 + φ_R/2] / √p(i|θ).
pub fn measure_update(
    state: &CavityPureState,
    p: &RamseyParams,
    i: Outcome,
) -> Result<(CavityPureState, f64)> {
    let prob = outcome_probability_pure(state, p, i);
    if prob <= 1e-12 {
        return Err(Error::ImpossibleOutcome { outcome: i.sign(), prob });
    }
    let amps: Vec<C64> = state
        .amps()
        .iter()
        .enumerate()
        .map(|(n, c)| c * C64::new(p.angle(n, i).cos(), 0.0))
        .collect();
    Ok((CavityPureState::normalized(amps)?, prob))
}

/// Draws an outcome with probability p(i|θ) and returns the updated state.
/// Deterministic for a fixed `rng` state.
pub fn sample_outcome(
    rng: &mut CounterRng,
    state: &CavityPureState,
    p: &RamseyParams,
) -> (Outcome, CavityPureState) {
    let plus = outcome_probability_pure(state, p, Outcome::Plus);
    let i = if rng.uniform() < plus { Outcome::Plus } else { Outcome::Minus };
    // the drawn branch has nonzero probability by construction
    let (post, _) = measure_update(state, p, i).expect("sampled outcome has positive probability");
    (i, post)
}

// ---------------------------------------------------------------------------
// probe density matrix
// ---------------------------------------------------------------------------

/// 2×2 density matrix of one probe atom after the interferometer.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeState {
    mat: Matrix2<C64>,
}

impl ProbeState {
    /// Checks Hermiticity, unit trace and positivity (all within 1e−9).
    pub fn new(mat: Matrix2<C64>) -> Result<Self> {
        let herm = (mat - mat.adjoint()).norm();
        if herm > 1e-9 {
            return Err(Error::InvalidParameter(format!("probe not Hermitian ({herm:.2e})")));
        }
        let tr = mat[(0, 0)].re + mat[(1, 1)].re;
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("probe trace {tr} differs from 1")));
        }
        // eigenvalues of a Hermitian 2x2
        let a = mat[(0, 0)].re;
        let d = mat[(1, 1)].re;
        let b = mat[(0, 1)];
        let disc = ((a - d) / 2.0).powi(2) + b.norm_sqr();
        let min_eig = (a + d) / 2.0 - disc.sqrt();
        if min_eig < -1e-9 {
            return Err(Error::InvalidParameter(format!("probe eigenvalue {min_eig:.2e} < 0")));
        }
        Ok(Self { mat })
    }

    pub(crate) fn from_mat_unchecked(mat: Matrix2<C64>) -> Self {
        Self { mat }
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.mat
    }

    /// ⟨σ_z⟩ = ρ₀₀ − ρ₁₁.
    pub fn expectation_z(&self) -> f64 {
        self.mat[(0, 0)].re - self.mat[(1, 1)].re
    }

    /// The interference term χ = Σ_n q_n e^{i[(n+1/2)θ + φ_R]} carried by the
    /// probe: ρ = ½ [[1 + Re χ, −i Im χ], [i Im χ, 1 − Re χ]]. For a Fock
    /// field |χ| = 1 and arg χ = (N + 1/2)θ + φ_R (mod 2π).
    pub fn interference(&self) -> C64 {
        let re = self.expectation_z();
        let im = (self.mat[(1, 0)] * C64::new(0.0, -1.0)).re * 2.0;
        C64::new(re, im)
    }

    /// Eigenvalues (descending) and eigenvectors of the 2×2 Hermitian matrix.
    pub fn spectral(&self) -> ([f64; 2], [nalgebra::Vector2<C64>; 2]) {
        let a = self.mat[(0, 0)].re;
        let d = self.mat[(1, 1)].re;
        let b = self.mat[(0, 1)];
        let mean = (a + d) / 2.0;
        let disc = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        let (l0, l1) = (mean + disc, mean - disc);
        let v0 = if b.norm() > 1e-300 {
            nalgebra::Vector2::new(b, C64::new(l0 - a, 0.0))
        } else if a >= d {
            nalgebra::Vector2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
        } else {
            nalgebra::Vector2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))
        };
        let v0 = v0 / C64::new(v0.norm(), 0.0);
        // orthogonal complement in 2 dimensions
        let v1 = nalgebra::Vector2::new(-v0[1].conj(), v0[0].conj());
        ([l0, l1], [v0, v1])
    }
}

/// Reduced probe state for a diagonal field: χ = Σ_n q_n e^{i(n+1/2)θ},
/// rotated by the second-pulse offset, packaged as
/// ρ = ½ [[1 + Re χ, −i Im χ], [i Im χ, 1 − Re χ]].
pub fn probe_reduced_state(dist: &PhotonDistribution, p: &RamseyParams) -> ProbeState {
    let mut chi = C64::new(0.0, 0.0);
    for (n, &q) in dist.probs().iter().enumerate() {
        chi += C64::new(0.0, (n as f64 + 0.5) * p.theta()).exp() * q;
    }
    chi *= C64::new(0.0, p.ramsey_phase()).exp();
    probe_from_interference(chi)
}

pub(crate) fn probe_from_interference(chi: C64) -> ProbeState {
    let half = C64::new(0.5, 0.0);
    let mat = Matrix2::new(
        half * (1.0 + chi.re),
        C64::new(0.0, -0.5 * chi.im),
        C64::new(0.0, 0.5 * chi.im),
        half * (1.0 - chi.re),
    );
    ProbeState::from_mat_unchecked(mat)
}

// ---------------------------------------------------------------------------
// atom-cavity geometry
// ---------------------------------------------------------------------------

/// Geometry and beam parameters that fix the interaction phase of one probe
/// crossing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryParams {
    /// Vacuum Rabi frequency at the mode center, rad/s.
    pub omega0: f64,
    /// Gaussian mode waist, m.
    pub waist: f64,
    /// Atom-cavity detuning δ, rad/s (nonzero, sign free).
    pub detuning: f64,
    /// Atom velocity, m/s.
    pub velocity: f64,
    /// Cavity angular frequency ω_C, rad/s.
    pub omega_c: f64,
    /// Axial position along the standing wave, m.
    pub z: f64,
    /// Radial offset R from the mode axis, m.
    pub radial: f64,
}

impl GeometryParams {
    pub fn new(
        omega0: f64,
        waist: f64,
        detuning: f64,
        velocity: f64,
        omega_c: f64,
        z: f64,
        radial: f64,
    ) -> Result<Self> {
        if !(omega0 > 0.0 && waist > 0.0 && velocity > 0.0 && omega_c > 0.0) {
            return Err(Error::InvalidParameter(
                "omega0, waist, velocity, omega_c must be positive".into(),
            ));
        }
        if detuning == 0.0 || !detuning.is_finite() {
            return Err(Error::InvalidParameter("detuning must be nonzero".into()));
        }
        if z < 0.0 || radial < 0.0 {
            return Err(Error::InvalidParameter("z and radial must be >= 0".into()));
        }
        Ok(Self { omega0, waist, detuning, velocity, omega_c, z, radial })
    }

    /// Published Fabry-Pérot / circular-Rydberg working point:
    /// Ω₀/2π = 49 kHz, w = 6 mm, δ/2π = 245 kHz, v = 250 m/s,
    /// ω_C/2π = 51.099 GHz, on axis at z = 0.
    pub fn lab_defaults() -> Self {
        use std::f64::consts::TAU;
        Self {
            omega0: TAU * 49e3,
            waist: 6e-3,
            detuning: TAU * 245e3,
            velocity: 250.0,
            omega_c: TAU * 51.099e9,
            z: 0.0,
            radial: 0.0,
        }
    }

    pub fn with_z(mut self, z: f64) -> Self {
        self.z = z;
        self
    }

    /// Local Rabi frequency Ω(R) = Ω₀ e^{−R²/w²}.
    pub fn rabi(&self) -> f64 {
        self.omega0 * (-(self.radial * self.radial) / (self.waist * self.waist)).exp()
    }
}

/// Interaction phase accumulated by one crossing:
/// θ(v, z) = √(2π) Ω(R)² w cos²(ω_C z/c) / (v δ).
pub fn dispersive_phase(g: &GeometryParams) -> f64 {
    let omega = g.rabi();
    let standing = (g.omega_c * g.z / SPEED_OF_LIGHT).cos().powi(2);
    (std::f64::consts::TAU).sqrt() * omega * omega * g.waist * standing / (g.velocity * g.detuning)
}
