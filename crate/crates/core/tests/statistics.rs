//! Seeded statistical checks; each uses a fixed stream so results are reproducible.

use qsd_core::diffusion::{
    estimate_green_mc, simulate_until_absorption, Ball, BoxDomain, BrownianMotion, SimOptions,
};
use qsd_core::reinforced::{
    cycle_lengths, lambda0_estimate, run_reinforced, survival_log_slope, DiagnosticsConfig,
    OccupationMeasure, Points,
};
use qsd_core::rng::stream;

const LAMBDA0_INTERVAL: f64 = std::f64::consts::PI * std::f64::consts::PI / 2.0;

fn bridge() -> SimOptions {
    SimOptions {
        bridge_correction: true,
        ..SimOptions::default()
    }
}

#[test]
fn disk_center_exit_time_is_one_half() {
    // (1/2)Δu = −1 on the unit disk, u = 0 on the circle: u(r) = (1 − r²)/2
    let g = estimate_green_mc(
        &BrownianMotion::new(2),
        &Ball::unit_disk(),
        &[0.0, 0.0],
        |_| 1.0,
        20_000,
        1e-4,
        31,
        &bridge(),
    )
    .unwrap();
    assert!(
        (g.estimate - 0.5).abs() <= 3.0 * g.std_error,
        "{} ± {}",
        g.estimate,
        g.std_error
    );
}

#[test]
fn interval_survival_tail_decays_at_lambda0() {
    let d = BoxDomain::unit_interval();
    let m = BrownianMotion::new(1);
    let mut rng = stream(41, 0);
    let times: Vec<f64> = (0..20_000)
        .map(|_| {
            simulate_until_absorption(&m, &d, &[0.5], 1e-4, &mut rng, &bridge())
                .unwrap()
                .absorption_time
        })
        .collect();
    let slope = survival_log_slope(&times, 0.3, 0.003).unwrap();
    assert!(
        (slope + LAMBDA0_INTERVAL).abs() <= 0.1 * LAMBDA0_INTERVAL,
        "{slope}"
    );
}

#[test]
fn lambda0_estimates_from_lengths_and_tail_agree() {
    let d = BoxDomain::unit_interval();
    let trace = run_reinforced(
        &BrownianMotion::new(1),
        &d,
        &[0.5],
        1e-3,
        20_000,
        &mut stream(43, 0),
        &DiagnosticsConfig::default(),
    )
    .unwrap();
    let from_lengths = lambda0_estimate(&trace).unwrap();
    let lengths = cycle_lengths(&trace, 2_000);
    let from_tail = -survival_log_slope(&lengths, 0.3, 0.003).unwrap();
    assert!(
        (from_lengths - from_tail).abs() <= 0.1 * from_lengths,
        "{from_lengths} vs {from_tail}"
    );
}

#[test]
fn resampling_frequencies_pass_chi_square() {
    let weights = [1.0, 2.0, 3.0, 4.0, 5.0, 0.5, 0.25, 6.0, 1.5, 2.75];
    let mut occ = OccupationMeasure::new(Points::new(1));
    for (i, &w) in weights.iter().enumerate() {
        occ.push(&[i as f64], w);
    }
    let total: f64 = weights.iter().sum();
    let draws = 100_000;
    let mut counts = [0usize; 10];
    let mut rng = stream(47, 0);
    for _ in 0..draws {
        counts[occ.resample(&mut rng).unwrap()[0] as usize] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&weights)
        .map(|(&c, &w)| {
            let expected = draws as f64 * w / total;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    // upper 0.1% point of χ² with 9 degrees of freedom
    assert!(chi2 < 27.877, "{chi2}");
}
