//! Axial displacement sensing with the dispersive phase.
//!
//! θ(z) ∝ cos²(ω_C z/c) is steepest at z* = cπ/(4ω_C), where
//! |dθ/dz| = 1/z₀ with
//!
//! ```text
//! z₀ = δ v c / (√(2π) Ω₀² w ω_C),
//! ```
//!
//! so a phase uncertainty δθ propagates to δz = z₀ δθ. With the headline
//! counting δθ ≳ 1/(√m N) this gives δz ≥ z₀/(√m N); the Cramér–Rao variant
//! with the (N + 1/2) factor is also provided.

use crate::ramsey::{dispersive_phase, GeometryParams, SPEED_OF_LIGHT};

/// Characteristic length z₀ = δvc/(√(2π) Ω₀² w ω_C); the inverse of the
/// phase slope at the maximum-slope point.
pub fn z_zero(g: &GeometryParams) -> f64 {
    g.detuning * g.velocity * SPEED_OF_LIGHT
        / ((std::f64::consts::TAU).sqrt() * g.omega0 * g.omega0 * g.waist * g.omega_c)
}

/// Position of maximum |dθ/dz|: z* = cπ/(4 ω_C).
pub fn max_slope_position(g: &GeometryParams) -> f64 {
    SPEED_OF_LIGHT * std::f64::consts::PI / (4.0 * g.omega_c)
}

/// Analytic slope dθ/dz = −√(2π) Ω₀² w ω_C sin(2ω_C z/c)/(v δ c) at the
/// geometry's own z (on axis).
pub fn phase_slope(g: &GeometryParams) -> f64 {
    let omega = g.rabi();
    -(std::f64::consts::TAU).sqrt() * omega * omega * g.waist * g.omega_c
        * (2.0 * g.omega_c * g.z / SPEED_OF_LIGHT).sin()
        / (g.velocity * g.detuning * SPEED_OF_LIGHT)
}

/// Headline sensitivity δz = z₀/(√m N).
pub fn displacement_sensitivity(m: usize, n_photons: usize, g: &GeometryParams) -> f64 {
    z_zero(g) / ((m as f64).sqrt() * n_photons as f64)
}

/// Cramér–Rao propagation δz = z₀/(√m (N + 1/2)); differs from the headline
/// value only by the N vs N + 1/2 convention.
pub fn displacement_sensitivity_cramer_rao(
    m: usize,
    n_photons: usize,
    g: &GeometryParams,
) -> f64 {
    z_zero(g) * crate::estimate::crb_noiseless(n_photons, m)
}

/// (z, θ(z), dθ/dz) sample for sweep exports.
pub fn phase_profile(g: &GeometryParams, z: f64) -> (f64, f64, f64) {
    let at = g.with_z(z);
    (z, dispersive_phase(&at), phase_slope(&at))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn z_zero_lab_value() {
        let g = GeometryParams::lab_defaults();
        let z0 = z_zero(&g);
        assert!((z0 * 1e3 - 0.2523).abs() / 0.2523 < 5e-3, "z0 = {} mm", z0 * 1e3);
        // doubling the velocity doubles z0
        let mut g2 = g;
        g2.velocity *= 2.0;
        assert_abs_diff_eq!(z_zero(&g2), 2.0 * z0, epsilon = 1e-18);
    }

    #[test]
    fn sensitivity_values_and_scaling() {
        let g = GeometryParams::lab_defaults();
        let dz = displacement_sensitivity(1000, 8, &g);
        assert!((dz * 1e6 - 0.997).abs() / 0.997 < 5e-3, "dz = {} um", dz * 1e6);

        // quadrupling m halves the sensitivity
        let dz4 = displacement_sensitivity(4000, 8, &g);
        assert_abs_diff_eq!(dz4, dz / 2.0, epsilon = 1e-18);

        assert_abs_diff_eq!(displacement_sensitivity(1, 1, &g), z_zero(&g), epsilon = 1e-18);
    }

    #[test]
    fn slope_at_max_slope_point_is_inverse_z_zero() {
        let g = GeometryParams::lab_defaults();
        let z_star = max_slope_position(&g);
        let z0 = z_zero(&g);

        // analytic slope
        let slope = phase_slope(&g.with_z(z_star));
        assert_abs_diff_eq!(slope * z0, -1.0, epsilon = 1e-9);

        // central finite difference of the phase itself
        let h = 1e-7;
        let fd = (dispersive_phase(&g.with_z(z_star + h)) - dispersive_phase(&g.with_z(z_star - h)))
            / (2.0 * h);
        assert!((fd * z0 + 1.0).abs() < 1e-6, "fd·z0 = {}", fd * z0);
    }

    #[test]
    fn cramer_rao_variant_is_tighter() {
        let g = GeometryParams::lab_defaults();
        let a = displacement_sensitivity(1000, 8, &g);
        let b = displacement_sensitivity_cramer_rao(1000, 8, &g);
        assert!(b < a);
        assert_abs_diff_eq!(a / b, 8.5 / 8.0, epsilon = 1e-12);
    }
}
