//! Acceptance suite: one test per numbered criterion, each printing a
//! single `acceptance N: ... PASS/FAIL` line before asserting. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines for
//! passing criteria too. Criterion 10 (CLI byte determinism) lives in the
//! CLI package's own acceptance test.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use saddletrap::algebra::{Rational, TrigMat};
use saddletrap::analysis::{
    constancy_check, floquet_stability, mean_force_check, naive_vs_true, precession_rate,
    residual_scan, stability_sweep, PrecessionFrame,
};
use saddletrap::dynamics::{
    guiding_center, guiding_center_derivatives, inertial_to_rotating, rhs_inertial, rhs_rotating,
    rotating_to_inertial, State4, Vec2,
};
use saddletrap::integrator::integrate;
use saddletrap::verifier::{build_reduction, check_identities, contact_obstruction, saddle};

fn criterion(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {n}: {name} ... {verdict} ({detail})");
    assert!(pass, "acceptance {n} ({name}) failed: {detail}");
}

#[test]
fn criterion_1_exact_reduction_suite() {
    let start = Instant::now();
    let ledger = build_reduction();
    let checks = check_identities(&ledger);
    let required = [
        "b1_vanishes",
        "b2_frozen",
        "b3_frozen",
        "b4_frozen",
        "t2_commutes_with_drift",
        "t2_homological",
        "t4_homological",
    ];
    let missing: Vec<&str> = required
        .iter()
        .filter(|id| !checks.iter().any(|c| c.id == **id && c.pass))
        .copied()
        .collect();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    let elapsed = start.elapsed();
    let pass = failed.is_empty() && missing.is_empty() && elapsed < Duration::from_secs(1);
    criterion(
        1,
        "exact reduction identities",
        pass,
        &format!(
            "{} identities checked, failed: {failed:?}, missing: {missing:?}, {elapsed:.2?}",
            checks.len()
        ),
    );
}

#[test]
fn criterion_2_saddle_identities() {
    let start = Instant::now();
    let s = saddle();
    let j = saddletrap::verifier::quarter_turn();
    let sj = s.mul(&j).unwrap();
    let squared = s.mul(&s).unwrap().sub(&TrigMat::identity(2)).unwrap();
    let first = s
        .derivative()
        .sub(&sj.scale(&Rational::new(-2, 1)))
        .unwrap();
    let second = s
        .derivative()
        .derivative()
        .sub(&s.scale(&Rational::new(-4, 1)))
        .unwrap();
    let elapsed = start.elapsed();
    let pass = squared.is_zero()
        && first.is_zero()
        && second.is_zero()
        && elapsed < Duration::from_secs(1);
    criterion(
        2,
        "saddle matrix identities",
        pass,
        &format!(
            "S^2=I: {}, S'=-2SJ: {}, S''=-4S: {}, {elapsed:.2?}",
            squared.is_zero(),
            first.is_zero(),
            second.is_zero()
        ),
    );
}

#[test]
fn criterion_3_residual_scaling() {
    let start = Instant::now();
    let report = residual_scan(
        &[0.2, 0.1, 0.05, 0.025],
        50.0,
        State4::new(Vec2::new(1.0, 0.0), Vec2::ZERO),
    )
    .expect("scan runs");
    let elapsed = start.elapsed();
    let pass = (3.6..=4.4).contains(&report.fitted_slope)
        && report.excluded.is_empty()
        && elapsed < Duration::from_secs(10);
    criterion(
        3,
        "guiding-center residual scales like eps^4",
        pass,
        &format!(
            "fitted slope {:.4} (want [3.6, 4.4]), {} excluded, {elapsed:.2?}",
            report.fitted_slope,
            report.excluded.len()
        ),
    );
}

#[test]
fn criterion_4_contact_obstruction() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for k in [1, 2] {
        let report = contact_obstruction(k, 4).expect("obstruction decision");
        let certified = !report.feasible
            && report.rank_augmented == report.rank_coefficients + 1;
        pass &= certified;
        detail.push_str(&format!(
            "k={k}: feasible={}, rank {}/{}; ",
            report.feasible, report.rank_coefficients, report.rank_augmented
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(5);
    detail.push_str(&format!("{elapsed:.2?}"));
    criterion(4, "position-only transforms certified infeasible", pass, &detail);
}

#[test]
fn criterion_5_floquet_stability() {
    let start = Instant::now();

    let stable = floquet_stability(0.1).expect("stable case");
    let max_unit_gap = stable
        .multipliers
        .iter()
        .map(|m| (m.norm() - 1.0).abs())
        .fold(0.0f64, f64::max);

    let unstable = floquet_stability(1.5).expect("unstable case");

    let sweep = stability_sweep(0.5, 1.5, 64).expect("transition exists");
    let elapsed = start.elapsed();

    let pass = max_unit_gap <= 1e-6
        && stable.stable
        && unstable.max_modulus > 1.001
        && !unstable.stable
        && (sweep.epsilon_c - 1.0).abs() <= 0.02
        && elapsed < Duration::from_secs(30);
    criterion(
        5,
        "Floquet multipliers and stability threshold",
        pass,
        &format!(
            "eps=0.1 unit-circle gap {max_unit_gap:.2e}, eps=1.5 max modulus {:.2}, \
             eps_c {:.4} (want 1.00 +- 0.02), {elapsed:.2?}",
            unstable.max_modulus, sweep.epsilon_c
        ),
    );
}

#[test]
fn criterion_6_precession() {
    let start = Instant::now();

    let averaged = precession_rate(0.1, PrecessionFrame::Averaged, None).expect("averaged fit");
    let full = precession_rate(0.25, PrecessionFrame::Full, None).expect("full fit");
    let naive = naive_vs_true(0.1, None).expect("naive comparison");
    let elapsed = start.elapsed();

    let averaged_ok = averaged.relative_error <= 0.02 && averaged.prograde;
    let full_ok = full.relative_error <= 0.15 && full.prograde;
    let naive_ok = naive.opposite_signs && (naive.magnitude_ratio - 1.0).abs() <= 0.02;
    let pass = averaged_ok && full_ok && naive_ok && elapsed < Duration::from_secs(60);
    criterion(
        6,
        "prograde precession at eps^3/8",
        pass,
        &format!(
            "averaged eps=0.1: rate {:.4e} err {:.2e} prograde {}; \
             full eps=0.25: rate {:.4e} err {:.2e} prograde {}; \
             naive: opposite signs {} magnitude ratio {:.4}; {elapsed:.2?}",
            averaged.measured_rate,
            averaged.relative_error,
            averaged.prograde,
            full.measured_rate,
            full.relative_error,
            full.prograde,
            naive.opposite_signs,
            naive.magnitude_ratio
        ),
    );
}

#[test]
fn criterion_7_rotation_cancellation_and_mean_force() {
    let start = Instant::now();
    let deviation = constancy_check(0.1, Vec2::new(1.0, 0.0), 1000);
    let (mean, predicted) = mean_force_check(Vec2::new(1.0, 0.0), 0.1);
    let force_gap = (mean - predicted).norm();
    let elapsed = start.elapsed();
    let pass = deviation <= 1e-12 && force_gap <= 1e-10 && elapsed < Duration::from_secs(1);
    criterion(
        7,
        "product constancy and secular mean force",
        pass,
        &format!(
            "S R product deviation {deviation:.2e} (want <= 1e-12), \
             mean force gap {force_gap:.2e} (want <= 1e-10), {elapsed:.2?}"
        ),
    );
}

/// Max over matched samples of position plus velocity distance between two
/// sampled trajectories, with `map` applied to the second.
fn sampled_gap(
    reference: &[saddletrap::integrator::Sample],
    other: &[saddletrap::integrator::Sample],
    map: impl Fn(&State4, f64) -> State4,
) -> f64 {
    assert_eq!(reference.len(), other.len());
    reference
        .iter()
        .zip(other)
        .map(|(a, b)| {
            let mapped = map(&b.state, b.t);
            (mapped.pos - a.state.pos).norm() + (mapped.vel - a.state.vel).norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_8_frame_equivalence() {
    let start = Instant::now();
    let horizon = 20.0;
    let initial = State4::new(Vec2::new(1.0, 0.3), Vec2::new(-0.2, 0.4));
    let mut pass = true;
    let mut detail = String::new();

    for eps in [0.05, 0.1, 0.2] {
        let dt = eps / 100.0;
        let lab = |t: f64, s: &State4| rhs_inertial(t, s, eps);
        let rot = |_: f64, s: &State4| rhs_rotating(s, eps);
        let rot_initial = inertial_to_rotating(&initial, 0.0, eps);

        let inertial = integrate(&lab, initial, 0.0, horizon, dt, 50).unwrap();
        let rotating = integrate(&rot, rot_initial, 0.0, horizon, dt, 50).unwrap();
        let gap = sampled_gap(&inertial, &rotating, |s, t| rotating_to_inertial(s, t, eps));

        // Richardson estimate of each frame's own convergence error: step
        // halving changes a 4th-order result by 15/16 of the dt error.
        let inertial_half = integrate(&lab, initial, 0.0, horizon, dt / 2.0, 100).unwrap();
        let rotating_half = integrate(&rot, rot_initial, 0.0, horizon, dt / 2.0, 100).unwrap();
        let err_inertial = sampled_gap(&inertial, &inertial_half, |s, _| *s) * 16.0 / 15.0;
        let err_rotating = sampled_gap(&rotating, &rotating_half, |s, _| *s) * 16.0 / 15.0;
        let tolerance = 10.0 * (err_inertial + err_rotating) + 1e-12;

        pass &= gap <= tolerance;
        detail.push_str(&format!("eps={eps}: gap {gap:.2e} tol {tolerance:.2e}; "));
    }

    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    detail.push_str(&format!("{elapsed:.2?}"));
    criterion(8, "rotating and lab frames agree through R(wt)", pass, &detail);
}

#[test]
fn criterion_9_derivative_consistency() {
    let start = Instant::now();
    let eps = 0.1;
    let base = 2.0;

    // The oracle trajectory is exact, so finite differences of the guiding
    // center along it converge to the closed-form derivatives at the FD
    // scheme's own order with no integrator noise underneath.
    let u_at = |t: f64| {
        let s = common::exact_minus_mode(t, eps);
        guiding_center(s.pos, s.vel, t, eps)
    };
    let s0 = common::exact_minus_mode(base, eps);
    let (u0, du0, ddu0) = guiding_center_derivatives(s0.pos, s0.vel, base, eps);

    let errors = |h: f64| {
        let up = u_at(base + h);
        let um = u_at(base - h);
        let fd1 = (up - um) * (0.5 / h);
        let fd2 = (up - u0 * 2.0 + um) * (1.0 / (h * h));
        ((fd1 - du0).norm(), (fd2 - ddu0).norm())
    };

    let mut pass = true;
    let mut detail = String::new();
    for (label, pick) in [("u'", 0usize), ("u''", 1usize)] {
        let hs = [0.02, 0.01, 0.005];
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let (e1, e2) = errors(h);
                if pick == 0 { e1 } else { e2 }
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            pass &= (1.6..=2.4).contains(&order);
            detail.push_str(&format!("{label} order {order:.2}; "));
        }
    }

    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(5);
    detail.push_str(&format!("{elapsed:.2?}"));
    criterion(9, "closed-form derivatives match finite differences", pass, &detail);
}

/// The oracle itself must solve the lab-frame equation; checked by central
/// finite differences of its velocity against the trap's acceleration.
#[test]
fn oracle_satisfies_the_trap_equation() {
    let eps = 0.1;
    let h = 1e-5;
    for k in 0..20 {
        let t = 0.3 * k as f64;
        let s = common::exact_minus_mode(t, eps);
        let plus = common::exact_minus_mode(t + h, eps);
        let minus = common::exact_minus_mode(t - h, eps);
        let fd_x = (plus.pos - minus.pos) * (0.5 / h);
        let fd_v = (plus.vel - minus.vel) * (0.5 / h);
        let rhs = rhs_inertial(t, &s, eps);
        assert!((fd_x - s.vel).norm() < 1e-8, "position derivative at t={t}");
        assert!((fd_v - rhs.vel).norm() < 1e-6, "velocity derivative at t={t}");
    }
}

/// Floquet multipliers against the closed-form monodromy eigenvalues
/// `-exp(+-i pi sqrt(1 -+ eps^2))` of the co-rotating constant system.
#[test]
fn floquet_multipliers_match_closed_form() {
    let predicted = |eps: f64| -> Vec<Complex64> {
        let mut out = Vec::new();
        for sign in [1.0, -1.0] {
            let q = 1.0 - sign * eps * eps;
            if q >= 0.0 {
                let theta = PI * q.sqrt();
                out.push(-Complex64::from_polar(1.0, theta));
                out.push(-Complex64::from_polar(1.0, -theta));
            } else {
                let mu = PI * (-q).sqrt();
                out.push(Complex64::new(-mu.exp(), 0.0));
                out.push(Complex64::new(-(-mu).exp(), 0.0));
            }
        }
        out
    };

    for eps in [0.1, 0.5, 1.5] {
        let report = floquet_stability(eps).unwrap();
        for want in predicted(eps) {
            let gap = report
                .multipliers
                .iter()
                .map(|m| (m - want).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(
                gap <= 1e-6 + 1e-6 * want.norm(),
                "eps={eps}: no multiplier near {want} (closest at distance {gap:.2e}, \
                 got {:?})",
                report.multipliers
            );
        }
        assert!(
            (report.monodromy_determinant - 1.0).abs() <= 1e-8,
            "eps={eps}: determinant {} drifted off 1",
            report.monodromy_determinant
        );
    }
}
