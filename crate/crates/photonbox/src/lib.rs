//! Simulation and estimation toolkit for a microwave cavity ("photon box")
//! interrogated by dispersive Rydberg probe atoms.
//!
//! A probe atom crossing the cavity inside a Ramsey interferometer picks up a
//! phase (n + 1/2)θ per photon-number state |n⟩, so a σ_z readout of the atom
//! realizes a quantum nondemolition (QND) measurement of the field. The crate
//! covers the full protocol stack built on that channel:
//!
//! - [`fock`] — truncated Fock-space states (pure, diagonal, density) and the
//!   operator toolkit (displacement, squeeze, fidelity, moments);
//! - [`ramsey`] — the dispersive measurement channel itself: outcome
//!   probabilities, post-measurement states, probe density matrices, and the
//!   geometric phase θ(v, z) of a flying atom;
//! - [`prepare`] — Fock-state preparation, both stochastic (measurement-induced
//!   collapse of a coherent state) and deterministic (displacement feedback);
//! - [`damping`] — cavity loss models, the lossy probe state, Fisher and
//!   quantum Fisher information under damping, and the advantage-time budget;
//! - [`estimate`] — Cramér–Rao bounds, two-quadrature maximum-likelihood phase
//!   estimation, and the cascaded scheme that lifts the 2π/N phase ambiguity
//!   with geometrically growing photon numbers;
//! - [`sensing`] — conversion of phase sensitivity into axial displacement
//!   sensitivity at the maximum-slope point of the mode function;
//! - [`experiments`] — named, seeded, CSV-producing experiment drivers shared
//!   by the `photonbox` binary and the examples.
//!
//! Everything stochastic draws from [`rng::CounterRng`], a counter-based
//! generator with a documented algorithm, so ensembles are reproducible
//! bit-for-bit regardless of thread count.

pub mod damping;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod fock;
pub mod prepare;
pub mod ramsey;
pub mod report;
pub mod rng;
pub mod sensing;

pub use error::{Error, Result};
pub use fock::{CavityDensity, CavityPureState, PhotonDistribution};
pub use ramsey::{GeometryParams, Outcome, ProbeState, RamseyParams};
pub use rng::CounterRng;
