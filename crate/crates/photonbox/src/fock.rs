//! Truncated Fock-space representation of a single cavity mode.
//!
//! States live on the basis |0⟩ … |D−1⟩ with D the truncation dimension.
//! Three representations are provided:
//!
//! - [`CavityPureState`] — complex amplitudes c_n with Σ|c_n|² = 1,
//! - [`PhotonDistribution`] — the diagonal q_n = |c_n|² (all loss models here
//!   stay diagonal in the number basis),
//! - [`CavityDensity`] — a full D×D density matrix, needed once displacements
//!   create number-basis coherences (the feedback loop).
//!
//! The operator toolkit builds the annihilation operator a (a|n⟩ = √n |n−1⟩)
//! and forms the displacement and squeeze unitaries
//!
//! ```text
//! D(α) = exp(α a† − α* a),      S(ζ) = exp[ζ (a² − a†²) / 2]
//! ```
//!
//! by eigendecomposition of the Hermitian generator i·G, which keeps the
//! truncated matrices exactly unitary. Truncation leakage is watched at
//! construction (analytic tail mass) and when unitaries are applied (growth of
//! the top-level occupation); more than [`TAIL_LIMIT`] of norm beyond the
//! retained basis is reported as [`Error::TruncationOverflow`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest tolerated norm fraction beyond the truncated basis.
pub const TAIL_LIMIT: f64 = 1e-6;

/// Construction tolerance on Σ|c_n|² = 1 and Σ q_n = 1.
pub const NORM_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// operators
// ---------------------------------------------------------------------------

/// Annihilation operator a on the truncated basis: a|n⟩ = √n |n−1⟩.
pub fn annihilation_operator(dim: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Number operator a†a (diagonal 0, 1, …, D−1).
pub fn number_operator(dim: usize) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        (0..dim).map(|n| C64::new(n as f64, 0.0)),
    ))
}

/// exp(G) for an anti-Hermitian generator G, via eigendecomposition of the
/// Hermitian matrix iG. The result is unitary to machine precision on the
/// whole truncated space.
fn exp_anti_hermitian(gen: &DMatrix<C64>) -> DMatrix<C64> {
    let h = gen.map(|z| z * C64::i()); // Hermitian
    let eig = h.symmetric_eigen();
    let phases = DVector::from_iterator(
        gen.nrows(),
        eig.eigenvalues.iter().map(|&l| (C64::new(0.0, -l)).exp()),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// Displacement unitary D(α) = exp(α a† − α* a) on the truncated basis.
pub fn displacement_operator(alpha: C64, dim: usize) -> DMatrix<C64> {
    let a = annihilation_operator(dim);
    let gen = a.adjoint() * alpha - a * alpha.conj();
    exp_anti_hermitian(&gen)
}

/// Squeeze unitary S(ζ) = exp[ζ(a² − a†²)/2], ζ real ≥ 0. With this phase
/// convention and a real displacement the number statistics come out
/// sub-Poissonian.
pub fn squeeze_operator(zeta: f64, dim: usize) -> DMatrix<C64> {
    let a = annihilation_operator(dim);
    let a2 = &a * &a;
    let gen = (&a2 - a2.adjoint()) * C64::new(zeta / 2.0, 0.0);
    exp_anti_hermitian(&gen)
}

// ---------------------------------------------------------------------------
// pure states
// ---------------------------------------------------------------------------

/// Normalized amplitude vector c_n over the truncated Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CavityPureState {
    amps: Vec<C64>,
}

impl CavityPureState {
    /// Fock state |n⟩: c_k = δ_{k,n}.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::OutOfRange { n, dim });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(0, dim)
    }

    /// Coherent state c_n = e^{−|α|²/2} αⁿ/√(n!), renormalized after
    /// truncation. Errors if |α|² > dim/3 or the cut tail exceeds
    /// [`TAIL_LIMIT`].
    pub fn coherent(alpha: C64, dim: usize) -> Result<Self> {
        Self::coherent_with_tail(alpha, dim).map(|(s, _)| s)
    }

    /// Same as [`Self::coherent`] but also reports the truncated tail mass.
    pub fn coherent_with_tail(alpha: C64, dim: usize) -> Result<(Self, f64)> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        let nbar = alpha.norm_sqr();
        if nbar > dim as f64 / 3.0 {
            return Err(Error::InvalidParameter(format!(
                "|alpha|^2 = {nbar:.3} exceeds dim/3 = {:.3}",
                dim as f64 / 3.0
            )));
        }
        let mut amps = Vec::with_capacity(dim);
        let mut c = C64::new((-nbar / 2.0).exp(), 0.0);
        amps.push(c);
        for n in 1..dim {
            c *= alpha / C64::new((n as f64).sqrt(), 0.0);
            amps.push(c);
        }
        let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        let tail = 1.0 - kept;
        if tail > TAIL_LIMIT {
            return Err(Error::TruncationOverflow { tail, limit: TAIL_LIMIT });
        }
        let scale = C64::new(1.0 / kept.sqrt(), 0.0);
        for z in &mut amps {
            *z *= scale;
        }
        Ok((Self { amps }, tail))
    }

    /// Squeezed coherent state D(α)·S(ζ)·|0⟩ with α, ζ real, built from the
    /// truncated operator matrices.
    pub fn squeezed_coherent(alpha: f64, zeta: f64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter("dim must be >= 2".into()));
        }
        let s = squeeze_operator(zeta, dim);
        let d = displacement_operator(C64::new(alpha, 0.0), dim);
        let vac = DVector::from_fn(dim, |i, _| {
            if i == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let psi = d * (s * vac);
        let kept = psi.norm_squared();
        let tail = 1.0 - kept;
        if tail > TAIL_LIMIT {
            return Err(Error::TruncationOverflow { tail, limit: TAIL_LIMIT });
        }
        let scale = C64::new(1.0 / kept.sqrt(), 0.0);
        Ok(Self { amps: psi.iter().map(|z| z * scale).collect() })
    }

    /// Wraps an amplitude vector that is already normalized to [`NORM_TOL`].
    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "amplitudes not normalized: sum |c_n|^2 = {norm}"
            )));
        }
        Ok(Self { amps })
    }

    /// Normalizes an arbitrary nonzero amplitude vector.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize zero state".into()));
        }
        let scale = C64::new(1.0 / norm.sqrt(), 0.0);
        for z in &mut amps {
            *z *= scale;
        }
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    /// Applies a unitary on the truncated basis. Growth of the top-level
    /// occupation beyond [`TAIL_LIMIT`] is treated as truncation leakage.
    pub fn apply_unitary(&self, u: &DMatrix<C64>) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { left: u.nrows(), right: self.dim() });
        }
        let v = DVector::from_column_slice(&self.amps);
        let w = u * v;
        let edge_before = self.amps[self.dim() - 1].norm_sqr();
        let edge_after = w[self.dim() - 1].norm_sqr();
        if edge_after - edge_before > TAIL_LIMIT {
            return Err(Error::TruncationOverflow {
                tail: edge_after - edge_before,
                limit: TAIL_LIMIT,
            });
        }
        Self::normalized(w.iter().copied().collect())
    }

    /// |c_n|² as a [`PhotonDistribution`].
    pub fn photon_distribution(&self) -> PhotonDistribution {
        let probs: Vec<f64> = self.amps.iter().map(|z| z.norm_sqr()).collect();
        let total: f64 = probs.iter().sum();
        PhotonDistribution { probs: probs.into_iter().map(|p| p / total).collect() }
    }

    pub fn mean_photon(&self) -> f64 {
        self.photon_distribution().mean()
    }

    /// |⟨self|other⟩|².
    pub fn overlap(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        let ip: C64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(ip.norm_sqr())
    }
}

// ---------------------------------------------------------------------------
// diagonal states
// ---------------------------------------------------------------------------

/// Probability vector q_n over photon numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
}

impl PhotonDistribution {
    /// Wraps a probability vector; q_n ≥ 0 and Σ q_n = 1 within [`NORM_TOL`].
    /// Negative entries above −1e−12 (integration round-off) are clamped.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        for q in &mut probs {
            if *q < 0.0 {
                if *q < -1e-12 {
                    return Err(Error::InvalidParameter(format!("negative probability {q}")));
                }
                *q = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Delta distribution at photon number n.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::OutOfRange { n, dim });
        }
        let mut probs = vec![0.0; dim];
        probs[n] = 1.0;
        Ok(Self { probs })
    }

    pub(crate) fn from_probs_renormalized(probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        Self { probs: probs.into_iter().map(|p| (p / total).max(0.0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Zero-pads to a larger dimension.
    pub fn padded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch { left: dim, right: self.dim() });
        }
        let mut probs = self.probs.clone();
        probs.resize(dim, 0.0);
        Ok(Self { probs })
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, q)| n as f64 * q)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(n, q)| (n as f64 - mu).powi(2) * q)
            .sum()
    }

    /// Variance over mean; < 1 flags sub-Poissonian (number-squeezed) light.
    pub fn fano(&self) -> f64 {
        self.variance() / self.mean()
    }

    /// Uhlmann fidelity for two diagonal states: (Σ_n √(p_n q_n))².
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        self.bhattacharyya(other).map(|b| b * b)
    }

    /// Amplitude overlap Σ_n √(p_n q_n) (the square root of the fidelity).
    pub fn bhattacharyya(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p * q).sqrt())
            .sum())
    }

    pub fn to_density(&self) -> CavityDensity {
        let dim = self.dim();
        let mut mat = DMatrix::zeros(dim, dim);
        for (n, &q) in self.probs.iter().enumerate() {
            mat[(n, n)] = C64::new(q, 0.0);
        }
        CavityDensity { mat }
    }
}

// ---------------------------------------------------------------------------
// density matrices
// ---------------------------------------------------------------------------

/// Full D×D cavity density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CavityDensity {
    mat: DMatrix<C64>,
}

impl CavityDensity {
    /// Wraps a matrix after checking Hermiticity (1e−10), unit trace (1e−10)
    /// and positivity (eigenvalues ≥ −1e−9).
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidParameter("density matrix must be square".into()));
        }
        let d = Self { mat };
        d.validate()?;
        Ok(d)
    }

    pub fn from_pure(state: &CavityPureState) -> Self {
        let v = DVector::from_column_slice(state.amps());
        Self { mat: &v * v.adjoint() }
    }

    /// Checks the defining invariants; cheap enough to run after every
    /// channel application in tests.
    pub fn validate(&self) -> Result<()> {
        let m = &self.mat;
        let herm = (m - m.adjoint()).norm();
        if herm > 1e-10 {
            return Err(Error::InvalidParameter(format!("not Hermitian: |ρ − ρ†| = {herm:.2e}")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("trace {tr} differs from 1")));
        }
        let min_eig = m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-9 {
            return Err(Error::InvalidParameter(format!("negative eigenvalue {min_eig:.2e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    pub fn population(&self, n: usize) -> f64 {
        self.mat[(n, n)].re
    }

    pub fn photon_distribution(&self) -> PhotonDistribution {
        PhotonDistribution::from_probs_renormalized(
            (0..self.dim()).map(|n| self.mat[(n, n)].re.max(0.0)).collect(),
        )
    }

    /// U ρ U†, renormalized.
    pub fn conjugated(&self, u: &DMatrix<C64>) -> Result<Self> {
        if u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { left: u.nrows(), right: self.dim() });
        }
        let m = u * &self.mat * u.adjoint();
        let tr: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
        Ok(Self { mat: m / C64::new(tr, 0.0) })
    }

    /// Applies a diagonal Kraus operator M = diag(w_n) and renormalizes;
    /// returns the pre-normalization weight tr(MρM†).
    pub fn apply_diagonal_kraus(&self, weights: &[f64]) -> Result<(Self, f64)> {
        if weights.len() != self.dim() {
            return Err(Error::DimensionMismatch { left: weights.len(), right: self.dim() });
        }
        let dim = self.dim();
        let mut m = self.mat.clone();
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] *= C64::new(weights[i] * weights[j], 0.0);
            }
        }
        let tr: f64 = (0..dim).map(|i| m[(i, i)].re).sum();
        if tr <= 1e-12 {
            return Err(Error::ImpossibleOutcome { outcome: 0, prob: tr });
        }
        Ok((Self { mat: m / C64::new(tr, 0.0) }, tr))
    }

    /// Uhlmann fidelity F(ρ, σ) = (tr √(√ρ σ √ρ))².
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        let sqrt_a = matrix_sqrt(&self.mat);
        let inner = &sqrt_a * &other.mat * &sqrt_a;
        let eig = inner.symmetric_eigen();
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let cutoff = lmax * 1e-13;
        let tr: f64 = eig
            .eigenvalues
            .iter()
            .map(|&l| if l > cutoff { l.sqrt() } else { 0.0 })
            .sum();
        Ok(tr * tr)
    }
}

/// Principal square root of a Hermitian PSD matrix (tiny negative eigenvalues
/// from round-off are clamped to zero).
fn matrix_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = lmax * 1e-13;
    let roots = DVector::from_iterator(
        m.nrows(),
        eig.eigenvalues
            .iter()
            .map(|&l| C64::new(if l > cutoff { l.sqrt() } else { 0.0 }, 0.0)),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}
