//! Axial displacement sensing: the standing-wave phase profile θ(z), its
//! slope, and the position sensitivity at the maximum-slope point.
//!
//! ```bash
//! cargo run --release -p photonbox --example sensing
//! ```

use photonbox::report::{fmt, write_csv};
use photonbox::sensing::{
    displacement_sensitivity, displacement_sensitivity_cramer_rao, max_slope_position,
    phase_profile, z_zero,
};
use photonbox::GeometryParams;

fn main() -> Result<(), photonbox::Error> {
    let g = GeometryParams::lab_defaults();

    let z0 = z_zero(&g);
    let z_star = max_slope_position(&g);
    println!("characteristic length z0 = {:.4} mm", z0 * 1e3);
    println!("maximum-slope point  z* = {:.4} mm", z_star * 1e3);
    println!(
        "sensitivity (m = 1000, N = 8): {:.4} um  ({:.4} um with the N + 1/2 bound)",
        displacement_sensitivity(1000, 8, &g) * 1e6,
        displacement_sensitivity_cramer_rao(1000, 8, &g) * 1e6,
    );

    let points = 201;
    let z_max = 2.0 * z_star;
    let rows: Vec<Vec<String>> = (0..points)
        .map(|k| {
            let (z, theta, slope) = phase_profile(&g, z_max * k as f64 / (points - 1) as f64);
            vec![fmt(z), fmt(theta), fmt(slope)]
        })
        .collect();
    write_csv(
        "sensing.csv".as_ref(),
        &[("z0_m".into(), fmt(z0)), ("z_star_m".into(), fmt(z_star))],
        &["z", "theta", "dtheta_dz"],
        &rows,
    )?;
    println!("wrote sensing.csv");
    Ok(())
}
