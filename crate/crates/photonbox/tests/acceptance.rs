//! End-to-end acceptance checks. Each test prints one PASS line (run with
//! `--nocapture`); a failed assertion is the FAIL line.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;

use photonbox::damping::{
    advantage_time, average_qfi, binomial_populations, eta_of_t, evolve_rate_equations,
    exact_populations, max_useful_trials, optimal_qfi, qfi_lossy, qfi_numeric, DampingParams,
};
use photonbox::estimate::{
    cascade_ensemble, crb_noiseless, estimate_phase, fisher_avg_coherent, reconstruct_theta,
    stage_phases, wrap_phase,
};
use photonbox::fock::{CavityPureState, PhotonDistribution};
use photonbox::prepare::{
    degeneracy_classes, feedback_prepare, trajectory_ensemble, FeedbackConfig, OutcomeRecord,
};
use photonbox::ramsey::{sample_outcome, RamseyParams};
use photonbox::sensing::{displacement_sensitivity, max_slope_position, z_zero};
use photonbox::{CounterRng, GeometryParams};

fn lossy_probe_family(n: usize, eta: f64) -> impl Fn(f64) -> photonbox::ProbeState {
    move |theta| photonbox::damping::lossy_probe(n, eta, theta).probe
}

/// 1. Noiseless Cramér–Rao bound: a seeded two-quadrature MLE ensemble at
///    N = 8, m = 1000 per quadrature attains a standard deviation within 10% of
///    1/(√2000 · 8.5), in under 30 s.
#[test]
fn acceptance_01_noiseless_bound() {
    let start = Instant::now();
    let n = 8usize;
    let m = 1000usize;
    let theta_true = 0.05;
    let reps = 1000usize;

    let estimates: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = CounterRng::stream(0xACC01, rep as u64);
            let state = CavityPureState::fock(n, n + 1).unwrap();
            let mut records = Vec::new();
            for phase in [0.0, std::f64::consts::FRAC_PI_2] {
                let params = RamseyParams::with_ramsey_phase(theta_true, phase).unwrap();
                let mut rec = OutcomeRecord::new(theta_true);
                let mut s = state.clone();
                for _ in 0..m {
                    let (i, post) = sample_outcome(&mut rng, &s, &params);
                    s = post;
                    rec.push(i);
                }
                records.push(rec);
            }
            estimate_phase(&records[0], &records[1], n).unwrap().theta_hat
        })
        .collect();

    let mean = estimates.iter().sum::<f64>() / reps as f64;
    let sd = (estimates.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (reps - 1) as f64)
        .sqrt();
    let bound = crb_noiseless(n, 2 * m);
    let ratio = sd / bound;
    let elapsed = start.elapsed().as_secs_f64();

    assert!(
        (0.9..=1.1).contains(&ratio),
        "[FAIL] acceptance 01: sd {sd:.4e} vs bound {bound:.4e} (ratio {ratio:.3})"
    );
    assert!(elapsed < 30.0, "[FAIL] acceptance 01: runtime {elapsed:.1} s >= 30 s");
    println!(
        "acceptance 01 PASS noiseless bound: sd = {sd:.4e}, bound = {bound:.4e}, \
         ratio = {ratio:.3}, bias = {:+.1e}, {elapsed:.1} s",
        mean - theta_true
    );
}

/// 2. Advantage horizon: t* = 0.172 ± 0.002 s and m* = 2097 ± 15 at the lab
///    working point, in under 1 s.
#[test]
fn acceptance_02_advantage_time() {
    let start = Instant::now();
    let d = DampingParams::lab_defaults();
    let adv = advantage_time(8, &d).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    assert!(
        (adv.t_star - 0.172).abs() <= 0.002,
        "[FAIL] acceptance 02: t* = {} s",
        adv.t_star
    );
    assert!(
        (adv.m_star as i64 - 2097).abs() <= 15,
        "[FAIL] acceptance 02: m* = {}",
        adv.m_star
    );
    assert!(elapsed < 1.0, "[FAIL] acceptance 02: runtime {elapsed:.2} s >= 1 s");
    println!(
        "acceptance 02 PASS advantage time: t* = {:.6} s, m* = {}, {elapsed:.3} s",
        adv.t_star, adv.m_star
    );
}

/// 3. Useful-trial ceiling: max_useful_trials = 8444 within 1%.
#[test]
fn acceptance_03_useful_trials() {
    let d = DampingParams::lab_defaults();
    let m_max = max_useful_trials(8, &d).unwrap();
    assert!(
        (m_max as f64 - 8444.0).abs() <= 0.01 * 8444.0,
        "[FAIL] acceptance 03: m_max = {m_max}"
    );
    // the ceiling property itself
    assert!(average_qfi(8, m_max, &d) >= 8.5);
    assert!(average_qfi(8, m_max + 1, &d) < 8.5);
    println!("acceptance 03 PASS useful-trial ceiling: m_max = {m_max}");
}

/// 4. Optimal information: closed form equals the θ → 0 numeric limit within
///    1e−6 relative on N ∈ {1,4,8,16} × η ∈ {0,0.1,0.2,0.5}, and the QFI closed
///    form equals the eigendecomposition oracle within 1e−8 relative, in < 5 s.
#[test]
fn acceptance_04_qfi_oracles() {
    let start = Instant::now();
    let mut worst_limit = 0.0f64;
    for n in [1usize, 4, 8, 16] {
        for eta in [0.0, 0.1, 0.2, 0.5] {
            let closed = optimal_qfi(n, eta);
            let limit = qfi_lossy(n, eta, 1e-4);
            let rel = (closed - limit).abs() / limit;
            worst_limit = worst_limit.max(rel);
            assert!(
                rel < 1e-6,
                "[FAIL] acceptance 04: N={n} eta={eta}: F_o {closed} vs limit {limit}"
            );
        }
    }
    let mut worst_oracle = 0.0f64;
    for eta in [0.1, 0.2] {
        for theta in [0.3, 1.0, 2.0] {
            let closed = qfi_lossy(8, eta, theta);
            let oracle = qfi_numeric(lossy_probe_family(8, eta), theta, 1e-6).unwrap();
            let rel = (closed - oracle).abs() / oracle;
            worst_oracle = worst_oracle.max(rel);
            assert!(
                rel < 1e-8,
                "[FAIL] acceptance 04: eta={eta} theta={theta}: {closed} vs oracle {oracle}"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "[FAIL] acceptance 04: runtime {elapsed:.2} s >= 5 s");
    println!(
        "acceptance 04 PASS information oracles: worst limit dev {worst_limit:.2e}, \
         worst eigen-oracle dev {worst_oracle:.2e}, {elapsed:.2} s"
    );
}

/// 5. Damping models: the thermal closed form stays ≥ 0.99 in amplitude
///    overlap against the binomial model over t ∈ [0, 0.5 s] (50-point grid,
///    N = 8, n_b = 0.05), and the rate-equation integrator matches the closed
///    form within 1e−6 max-abs.
#[test]
fn acceptance_05_damping_models() {
    let d = DampingParams::lab_defaults();
    let n = 8usize;

    let mut min_overlap = f64::INFINITY;
    let mut min_squared = f64::INFINITY;
    for k in 0..50 {
        let t = 0.5 * k as f64 / 49.0;
        let exact = exact_populations(n, t, &d).unwrap();
        let binom = binomial_populations(n, eta_of_t(t, &d))
            .unwrap()
            .padded(exact.dim())
            .unwrap();
        let overlap = exact.bhattacharyya(&binom).unwrap();
        min_overlap = min_overlap.min(overlap);
        min_squared = min_squared.min(exact.fidelity(&binom).unwrap());
    }
    assert!(
        min_overlap >= 0.99,
        "[FAIL] acceptance 05: min amplitude overlap {min_overlap:.6}"
    );

    let mut worst = 0.0f64;
    for t in [0.05, 0.1, 0.35] {
        let q0 = PhotonDistribution::fock(n, n + 11).unwrap();
        let integrated = evolve_rate_equations(&q0, t, &d).unwrap();
        let exact = exact_populations(n, t, &d).unwrap();
        let max_abs = integrated
            .probs()
            .iter()
            .zip(exact.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(max_abs);
        assert!(
            max_abs < 1e-6,
            "[FAIL] acceptance 05: rate equations vs closed form at t={t}: {max_abs:.2e}"
        );
    }
    println!(
        "acceptance 05 PASS damping models: min overlap = {min_overlap:.5} \
         (squared convention {min_squared:.5}), integrator max-abs = {worst:.2e}"
    );
}

/// 6. Stochastic preparation: 4000 seeded trajectories from coherent(√3) at
///    θ_s = 0.6 give class frequencies consistent with Poisson(3) (chi-square
///    p > 0.01); at θ_s = π/3 every converged class is one of the derived
///    degenerate classes (all superpositions); under 2 minutes.
#[test]
fn acceptance_06_stochastic_preparation() {
    let start = Instant::now();
    let dim = 15usize;
    let initial =
        CavityPureState::coherent(num_complex::Complex64::new(3.0_f64.sqrt(), 0.0), dim).unwrap();

    let results = trajectory_ensemble(0xACC06, 4000, &initial, 0.6, 10_000, 1e-3);
    let converged: Vec<_> = results.iter().filter(|r| r.converged).collect();
    let n_conv = converged.len();
    assert!(
        n_conv >= 3960,
        "[FAIL] acceptance 06: only {n_conv}/4000 trajectories converged"
    );

    // observed counts per photon number (classes are singletons at 0.6)
    let mut counts = vec![0.0f64; dim];
    for r in &converged {
        counts[r.converged_class[0]] += 1.0;
    }
    let prior = initial.photon_distribution();
    let expected: Vec<f64> = prior.probs().iter().map(|p| p * n_conv as f64).collect();

    // merge bins with expected < 5 into a tail bucket
    let mut obs_b = Vec::new();
    let mut exp_b = Vec::new();
    let (mut tail_o, mut tail_e) = (0.0, 0.0);
    for nn in 0..dim {
        if expected[nn] >= 5.0 {
            obs_b.push(counts[nn]);
            exp_b.push(expected[nn]);
        } else {
            tail_o += counts[nn];
            tail_e += expected[nn];
        }
    }
    obs_b.push(tail_o);
    exp_b.push(tail_e);
    let chi2: f64 = obs_b
        .iter()
        .zip(&exp_b)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = obs_b.len() as f64 - 1.0;
    let p_value = 1.0
        - statrs::distribution::ContinuousCDF::cdf(
            &statrs::distribution::ChiSquared::new(dof).unwrap(),
            chi2,
        );
    assert!(
        p_value > 0.01,
        "[FAIL] acceptance 06: chi2 = {chi2:.1} (dof {dof}), p = {p_value:.4}"
    );

    // degenerate working point: superposed classes only
    let classes = degeneracy_classes(PI / 3.0, dim);
    let results_deg = trajectory_ensemble(0xACC06 + 1, 500, &initial, PI / 3.0, 10_000, 1e-3);
    for r in &results_deg {
        assert!(r.converged, "[FAIL] acceptance 06: degenerate run did not converge");
        assert!(
            classes.contains(&r.converged_class),
            "[FAIL] acceptance 06: class {:?} not in derived partition",
            r.converged_class
        );
        assert!(
            r.converged_class.len() > 1,
            "[FAIL] acceptance 06: expected a superposed class"
        );
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "[FAIL] acceptance 06: runtime {elapsed:.1} s >= 120 s");
    println!(
        "acceptance 06 PASS stochastic preparation: {n_conv}/4000 converged, \
         chi2 = {chi2:.1} (dof {dof}), p = {p_value:.3}; {} degenerate runs all in \
         derived classes; {elapsed:.1} s",
        results_deg.len()
    );
}

/// 7. Cascade: exact round-trip identity over 10⁴ phases for every L ≤ 12
///    (error < 1e−10), and the noisy cascade (L = 4, m = 100, 500 random phases)
///    reaches an RMS error within 1.25× the bound 1/(√m (2^{L−1} + 1/2)).
#[test]
fn acceptance_07_cascade() {
    let grid = 10_000usize;
    let mut worst = 0.0f64;
    for levels in 1..=12usize {
        let mults: Vec<f64> = (0..levels).map(|j| (1u64 << j) as f64).collect();
        for k in 0..grid {
            let theta = -PI + std::f64::consts::TAU * (k as f64 + 0.5) / grid as f64;
            let est = stage_phases(theta, levels);
            let got = reconstruct_theta(&est, &mults);
            worst = worst.max((got - theta).abs());
        }
    }
    assert!(worst < 1e-10, "[FAIL] acceptance 07: round-trip error {worst:.2e}");

    let reps = 500usize;
    let (levels, m) = (4usize, 100usize);
    let mut rng = CounterRng::stream(0xACC07, u64::MAX);
    let thetas: Vec<f64> = (0..reps).map(|_| rng.uniform_in(-PI, PI)).collect();
    let outs = cascade_ensemble(0xACC07, levels, m, true, &thetas).unwrap();
    let rms = (outs
        .iter()
        .zip(&thetas)
        .map(|(o, &t)| wrap_phase(o.estimate.theta_hat - t).powi(2))
        .sum::<f64>()
        / reps as f64)
        .sqrt();
    let bound = 1.0 / ((m as f64).sqrt() * ((1u64 << (levels - 1)) as f64 + 0.5));
    assert!(
        rms <= 1.25 * bound,
        "[FAIL] acceptance 07: rms {rms:.4e} vs 1.25 x bound {:.4e}",
        1.25 * bound
    );

    // per-stage rounding errors beyond π/2 stay below 1% of stages
    let gross: usize = outs
        .iter()
        .flat_map(|o| o.stages.iter())
        .filter(|s| s.error.abs() > std::f64::consts::FRAC_PI_2)
        .count();
    let stage_total = reps * levels;
    assert!(
        (gross as f64) < 0.01 * stage_total as f64,
        "[FAIL] acceptance 07: {gross}/{stage_total} gross stage errors"
    );

    println!(
        "acceptance 07 PASS cascade: round-trip {worst:.1e}, noisy rms = {rms:.4e} \
         = {:.2} x bound, gross stage errors {gross}/{stage_total}",
        rms / bound
    );
}

/// 8. Displacement sensing: z₀ = 0.2523 mm ± 0.5% and δz(m = 1000, N = 8) =
///    0.997 µm ± 0.5%, and the finite-difference slope satisfies
///    |dθ/dz|·z₀ = 1 within 1e−6 at the maximum-slope point.
#[test]
fn acceptance_08_sensing() {
    let g = GeometryParams::lab_defaults();
    let z0 = z_zero(&g);
    let dz = displacement_sensitivity(1000, 8, &g);
    assert!(
        (z0 - 0.2523e-3).abs() / 0.2523e-3 <= 0.005,
        "[FAIL] acceptance 08: z0 = {z0}"
    );
    assert!(
        (dz - 0.997e-6).abs() / 0.997e-6 <= 0.005,
        "[FAIL] acceptance 08: dz = {dz}"
    );

    let z_star = max_slope_position(&g);
    let h = 1e-7;
    let fd = (photonbox::ramsey::dispersive_phase(&g.with_z(z_star + h))
        - photonbox::ramsey::dispersive_phase(&g.with_z(z_star - h)))
        / (2.0 * h);
    let product = fd.abs() * z0;
    assert!(
        (product - 1.0).abs() < 1e-6,
        "[FAIL] acceptance 08: |dtheta/dz| * z0 = {product}"
    );
    println!(
        "acceptance 08 PASS sensing: z0 = {:.4} mm, dz = {:.4} um, |slope|*z0 - 1 = {:+.1e}",
        z0 * 1e3,
        dz * 1e6,
        product - 1.0
    );
}

/// 9. Coherent-average information: (n̄+1/2)² + n̄ equals the brute Poisson
///    sum within 1e−10 for n̄ ∈ {0.5, 1, 3, 9}.
#[test]
fn acceptance_09_coherent_average_information() {
    let mut worst = 0.0f64;
    for nbar in [0.5f64, 1.0, 3.0, 9.0] {
        // independent truncated Poisson sum, tail below 1e-12
        let mut term = (-nbar).exp();
        let mut brute = term * 0.25;
        let mut i = 0usize;
        while term > 1e-18 || (i as f64) < nbar + 10.0 {
            i += 1;
            term *= nbar / i as f64;
            brute += term * (i as f64 + 0.5).powi(2);
            if i > 500 {
                break;
            }
        }
        let dev = (fisher_avg_coherent(nbar) - brute).abs();
        worst = worst.max(dev);
        assert!(
            dev < 1e-10,
            "[FAIL] acceptance 09: nbar={nbar}: closed {} vs brute {brute}",
            fisher_avg_coherent(nbar)
        );
    }
    println!("acceptance 09 PASS coherent-average information: worst |closed - brute| = {worst:.1e}");
}

/// 10. Feedback preparation: the noiseless loop reaches p(n_t) ≥ 0.8 for
///     n_t ∈ {1, 2, 3} within 500 steps in at least 90% of 50 seeded runs.
#[test]
fn acceptance_10_feedback_preparation() {
    let start = Instant::now();
    let mut summary = Vec::new();
    for target in [1usize, 2, 3] {
        let cfg = FeedbackConfig::new(target, 15).unwrap();
        let successes: usize = (0..50u64)
            .into_par_iter()
            .map(|run| {
                let mut rng = CounterRng::stream(0xACC10 + target as u64, run);
                feedback_prepare(&mut rng, &cfg).unwrap().success as usize
            })
            .sum();
        assert!(
            successes >= 45,
            "[FAIL] acceptance 10: target {target}: {successes}/50 successes"
        );
        summary.push(format!("n_t={target}: {successes}/50"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "acceptance 10 PASS feedback preparation: {}; {elapsed:.1} s",
        summary.join(", ")
    );
}
