//! Slower cross-checks of the analysis layer: scaling laws, sweep shape,
//! and shared frequencies between the true and wrong-sign averages.

use std::f64::consts::PI;

use saddletrap::analysis::{
    averaged_vs_direct, naive_vs_true, precession_rate, residual_scan, stability_grid,
    PrecessionFrame,
};
use saddletrap::dynamics::{State4, Vec2};

#[test]
fn residual_slope_is_stable_under_horizon_doubling() {
    let epsilons = [0.2, 0.1, 0.05];
    let initial = State4::new(Vec2::new(1.0, 0.0), Vec2::ZERO);
    let short = residual_scan(&epsilons, 20.0, initial).unwrap();
    let long = residual_scan(&epsilons, 40.0, initial).unwrap();
    for report in [&short, &long] {
        assert!(
            (3.6..=4.4).contains(&report.fitted_slope),
            "slope {} out of band",
            report.fitted_slope
        );
    }
    assert!(
        (short.fitted_slope - long.fitted_slope).abs() < 0.3,
        "doubling the horizon moved the slope from {} to {}",
        short.fitted_slope,
        long.fitted_slope
    );
}

#[test]
fn stability_flips_exactly_once_across_the_sweep() {
    let grid = stability_grid(0.5, 1.5, 64).unwrap();
    let flips = grid
        .windows(2)
        .filter(|w| w[0].stable != w[1].stable)
        .count();
    assert_eq!(flips, 1, "expected a single stable/unstable transition");
    assert!(grid.first().unwrap().stable);
    assert!(!grid.last().unwrap().stable);
}

#[test]
fn precession_rate_scales_cubically_in_epsilon() {
    let fast = precession_rate(0.1, PrecessionFrame::Averaged, None).unwrap();
    let slow = precession_rate(0.05, PrecessionFrame::Averaged, None).unwrap();
    let ratio = slow.measured_rate / fast.measured_rate;
    assert!(
        (ratio - 0.125).abs() <= 0.125 * 0.2,
        "rate(0.05)/rate(0.1) = {ratio}, want 1/8 within 20%"
    );
}

#[test]
fn both_averages_share_the_restoring_frequency() {
    let cmp = naive_vs_true(0.1, None).unwrap();
    let reference = 0.05;
    for (name, report) in [("averaged", &cmp.averaged), ("naive", &cmp.naive)] {
        let gap = (report.restoring_frequency - reference).abs() / reference;
        assert!(
            gap <= 0.01,
            "{name} restoring frequency {} is {gap:.4} away from eps/2",
            report.restoring_frequency
        );
    }
}

#[test]
fn averaged_equation_tracks_the_guiding_center() {
    let initial = State4::new(Vec2::new(1.0, 0.0), Vec2::new(0.0, 0.1));

    // One slow oscillation each: the horizon scales with the slow period.
    let gap_coarse = averaged_vs_direct(0.1, 4.0 * PI / 0.1, initial).unwrap();
    let gap_fine = averaged_vs_direct(0.05, 4.0 * PI / 0.05, initial).unwrap();
    assert!(gap_coarse.is_finite() && gap_coarse > 0.0);
    assert!(
        gap_fine < gap_coarse,
        "halving epsilon grew the one-slow-period gap: {gap_fine} vs {gap_coarse}"
    );

    // Fixed slow time t * eps^2: the gap should drop by at least half.
    let t1 = 4.0 * PI / 0.1;
    let g1 = averaged_vs_direct(0.1, t1, initial).unwrap();
    let g2 = averaged_vs_direct(0.05, 4.0 * t1, initial).unwrap();
    assert!(
        g2 / g1 <= 0.5,
        "fixed slow-time gap ratio {} exceeds 0.5 (g1 = {g1}, g2 = {g2})",
        g2 / g1
    );
}

#[test]
fn zero_initial_state_gives_zero_gap() {
    let gap = averaged_vs_direct(0.1, 30.0, State4::new(Vec2::ZERO, Vec2::ZERO)).unwrap();
    assert_eq!(gap, 0.0);
}
