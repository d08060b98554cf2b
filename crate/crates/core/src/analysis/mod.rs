//! Numeric experiments that measure what the exact reduction predicts:
//! fourth-order smallness of the guiding-center residual, the stability
//! threshold at epsilon = 1, circulating-force identities, and the prograde
//! precession of the guiding-center ellipse.

mod precession;

pub use precession::{
    naive_vs_true, precession_rate, NaiveComparison, PrecessionFrame, PrecessionReport,
};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{
    guiding_center, guiding_center_derivatives, rhs_averaged, rhs_inertial, saddle_matrix,
    State4, Vec2,
};
use crate::integrator::{eigen4, integrate, monodromy, IntegratorError};
use crate::linalg::Mat2;
use crate::par;

/// A Floquet multiplier within this of the unit circle counts as stable.
pub const STABILITY_MODULUS_TOL: f64 = 1e-3;

/// Residual maxima below this are treated as rounding noise and excluded
/// from log-log fits.
pub const RESIDUAL_NOISE_FLOOR: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate initial state: {0}")]
    DegenerateInitial(String),
    #[error("no stability transition inside [{lo}, {hi}]")]
    NoTransition { lo: f64, hi: f64 },
    #[error("frequency fit failed: {0}")]
    FitFailure(String),
    #[error(transparent)]
    Integration(#[from] IntegratorError),
}

/// Least-squares line through `(xs, ys)`: slope, intercept, rms residual.
pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExcludedPoint {
    pub epsilon: f64,
    pub max_residual: f64,
    pub reason: String,
}

/// Log-log scaling of the guiding-center residual against epsilon.
/// Points are reported with epsilon strictly decreasing.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingReport {
    pub epsilons: Vec<f64>,
    pub max_residuals: Vec<f64>,
    pub fitted_slope: f64,
    pub intercept: f64,
    /// rms of the log-log fit.
    pub fit_residual: f64,
    pub excluded: Vec<ExcludedPoint>,
}

/// For each epsilon, integrates the lab-frame trap over `horizon` and takes
/// the max norm of the guiding-center defect
/// `u'' + (eps^2/4) u - (eps^3/4) J u'` every 10 steps, then fits
/// `log(max residual)` against `log(eps)`. The closed-form defect is
/// O(eps^4), so the slope should sit near 4.
///
/// Epsilon values may come in any order but must be distinct, lie in
/// (0, 0.5], and number at least 2; `horizon` must be at least 20 (enough
/// slow motion for the max to saturate). The report sorts by decreasing
/// epsilon.
pub fn residual_scan(
    epsilons: &[f64],
    horizon: f64,
    initial: State4,
) -> Result<ScalingReport, AnalysisError> {
    if epsilons.len() < 2 {
        return Err(AnalysisError::InvalidInput(format!(
            "need at least 2 epsilon values, got {}",
            epsilons.len()
        )));
    }
    for &eps in epsilons {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(AnalysisError::InvalidInput(format!(
                "epsilon values must lie in (0, 0.5], got {eps}"
            )));
        }
    }
    if !horizon.is_finite() || horizon < 20.0 {
        return Err(AnalysisError::InvalidInput(format!(
            "horizon must be at least 20, got {horizon}"
        )));
    }
    if initial.max_abs() == 0.0 {
        return Err(AnalysisError::DegenerateInitial(
            "zero state has zero residual at every epsilon; the scaling fit is vacuous"
                .to_string(),
        ));
    }
    let mut epsilons = epsilons.to_vec();
    epsilons.sort_by(|a, b| b.total_cmp(a));
    if epsilons.windows(2).any(|w| w[0] == w[1]) {
        return Err(AnalysisError::InvalidInput(
            "duplicate epsilon values".to_string(),
        ));
    }

    let maxima: Vec<Result<f64, IntegratorError>> = par::map_collect(&epsilons, |&eps| {
        let samples = integrate(
            &|t, s: &State4| rhs_inertial(t, s, eps),
            initial,
            0.0,
            horizon,
            eps / 50.0,
            10,
        )?;
        let mut max = 0.0f64;
        for s in &samples {
            let (u, du, ddu) = guiding_center_derivatives(s.state.pos, s.state.vel, s.t, eps);
            let defect = ddu + u * (eps * eps / 4.0) - du.perp() * (eps.powi(3) / 4.0);
            max = max.max(defect.norm());
        }
        Ok(max)
    });

    let mut kept_logs = Vec::new();
    let mut max_residuals = Vec::new();
    let mut excluded = Vec::new();
    for (&eps, max) in epsilons.iter().zip(maxima) {
        let max = max?;
        max_residuals.push(max);
        if max < RESIDUAL_NOISE_FLOOR {
            excluded.push(ExcludedPoint {
                epsilon: eps,
                max_residual: max,
                reason: format!("below the rounding noise floor {RESIDUAL_NOISE_FLOOR:e}"),
            });
        } else {
            kept_logs.push((eps.ln(), max.ln()));
        }
    }
    if kept_logs.len() < 2 {
        return Err(AnalysisError::FitFailure(format!(
            "only {} usable points above the noise floor",
            kept_logs.len()
        )));
    }
    let xs: Vec<f64> = kept_logs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = kept_logs.iter().map(|p| p.1).collect();
    let (fitted_slope, intercept, fit_residual) = fit_line(&xs, &ys);
    Ok(ScalingReport {
        epsilons,
        max_residuals,
        fitted_slope,
        intercept,
        fit_residual,
        excluded,
    })
}

/// Floquet multipliers of the lab-frame system over one forcing period.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FloquetReport {
    pub epsilon: f64,
    pub multipliers: [Complex64; 4],
    pub max_modulus: f64,
    pub stable: bool,
    pub monodromy_determinant: f64,
    /// Set when the basis integration itself left the representable range
    /// (possible only far beyond the threshold); such a point is unstable
    /// with no meaningful multipliers.
    pub blew_up: bool,
}

fn floquet_with_dt(epsilon: f64, dt: f64) -> Result<FloquetReport, AnalysisError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(AnalysisError::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let period = std::f64::consts::PI * epsilon;
    let m = match monodromy(&|t, s: &State4| rhs_inertial(t, s, epsilon), period, dt) {
        Ok(m) => m,
        Err(IntegratorError::NonFinite { .. }) => {
            return Ok(FloquetReport {
                epsilon,
                multipliers: [Complex64::new(f64::INFINITY, 0.0); 4],
                max_modulus: f64::INFINITY,
                stable: false,
                monodromy_determinant: f64::INFINITY,
                blew_up: true,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let multipliers = eigen4(&m);
    let max_modulus = multipliers.iter().map(|m| m.norm()).fold(0.0, f64::max);
    Ok(FloquetReport {
        epsilon,
        multipliers,
        max_modulus,
        stable: max_modulus <= 1.0 + STABILITY_MODULUS_TOL,
        monodromy_determinant: m.det(),
        blew_up: false,
    })
}

/// Multipliers at inverse rotation rate `epsilon` (any positive value; the
/// interesting range straddles the threshold at 1).
pub fn floquet_stability(epsilon: f64) -> Result<FloquetReport, AnalysisError> {
    floquet_with_dt(epsilon, epsilon / 100.0)
}

/// Floquet reports on a uniform epsilon grid (inclusive endpoints), sweep
/// points distributed across workers.
pub fn stability_grid(
    eps_min: f64,
    eps_max: f64,
    n: usize,
) -> Result<Vec<FloquetReport>, AnalysisError> {
    if !(eps_min > 0.0 && eps_max > eps_min) {
        return Err(AnalysisError::InvalidInput(format!(
            "need 0 < eps_min < eps_max, got [{eps_min}, {eps_max}]"
        )));
    }
    if n < 2 {
        return Err(AnalysisError::InvalidInput(format!(
            "grid needs at least 2 points, got {n}"
        )));
    }
    let grid: Vec<f64> = (0..n)
        .map(|i| eps_min + (eps_max - eps_min) * i as f64 / (n - 1) as f64)
        .collect();
    par::map_collect(&grid, |&eps| floquet_stability(eps))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StabilitySweep {
    pub grid: Vec<FloquetReport>,
    /// Bisection bracket around the loss of stability.
    pub bracket: (f64, f64),
    pub epsilon_c: f64,
}

/// Bisects a stable/unstable bracket down to width 5e-4. `steps_per_eps`
/// sets the integration step as `epsilon / steps_per_eps`.
fn bisect_threshold(
    mut lo: f64,
    mut hi: f64,
    steps_per_eps: f64,
) -> Result<(f64, f64), AnalysisError> {
    for _ in 0..60 {
        if hi - lo <= 5e-4 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if floquet_with_dt(mid, mid / steps_per_eps)?.stable {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Locates the stability threshold: a coarse grid of at least 16 points
/// finds a stable-to-unstable flip, then bisection tightens the bracket to
/// width 5e-4. Errors with [`AnalysisError::NoTransition`] if the grid never
/// flips.
pub fn stability_sweep(
    eps_min: f64,
    eps_max: f64,
    n: usize,
) -> Result<StabilitySweep, AnalysisError> {
    if n < 16 {
        return Err(AnalysisError::InvalidInput(format!(
            "sweep needs at least 16 grid points, got {n}"
        )));
    }
    let grid = stability_grid(eps_min, eps_max, n)?;
    let flip = grid
        .windows(2)
        .position(|w| w[0].stable && !w[1].stable)
        .ok_or(AnalysisError::NoTransition {
            lo: eps_min,
            hi: eps_max,
        })?;
    let (lo, hi) = bisect_threshold(grid[flip].epsilon, grid[flip + 1].epsilon, 100.0)?;
    Ok(StabilitySweep {
        grid,
        bracket: (lo, hi),
        epsilon_c: 0.5 * (lo + hi),
    })
}

/// Max deviation of `S(t/eps) R(2t/eps) r0` from its value at `t = 0` over
/// `n` samples spanning five forcing periods. The product is constant in
/// exact arithmetic, so this measures pure rounding.
pub fn constancy_check(epsilon: f64, r0: Vec2, n: usize) -> f64 {
    let t_span = 5.0 * std::f64::consts::PI * epsilon;
    let reference = saddle_matrix(0.0).mul_vec(r0);
    let mut max = 0.0f64;
    for j in 0..=n {
        let t = t_span * j as f64 / n as f64;
        let tau = t / epsilon;
        let value = saddle_matrix(tau).mul_vec(Mat2::rotation(2.0 * tau).mul_vec(r0));
        max = max.max((value - reference).norm());
    }
    max
}

/// Mean over one forcing period of the force felt along the shifted orbit,
/// `F(t) = -S(t/eps) (x0 + (eps^2/4) S(t/eps) x0)`, against the predicted
/// secular force `-(eps^2/4) x0`. The rectangle rule is exact here (finitely
/// many harmonics, all resolved), so the gap is rounding only.
pub fn mean_force_check(x0: Vec2, epsilon: f64) -> (Vec2, Vec2) {
    let n = 1024;
    let period = std::f64::consts::PI * epsilon;
    let a = epsilon * epsilon / 4.0;
    let mut sum = Vec2::ZERO;
    for j in 0..n {
        let tau = (period * j as f64 / n as f64) / epsilon;
        let s = saddle_matrix(tau);
        let shifted = x0 + s.mul_vec(x0) * a;
        sum = sum + (-s.mul_vec(shifted));
    }
    let mean = sum * (1.0 / n as f64);
    (mean, x0 * (-a))
}

/// Max gap between the guiding center extracted from a direct lab-frame
/// integration and the trajectory of the averaged equation started from the
/// matched initial condition, compared on the same sampling grid.
/// Meaningful for `epsilon` up to 0.2 or so; larger values are rejected.
pub fn averaged_vs_direct(
    epsilon: f64,
    horizon: f64,
    initial: State4,
) -> Result<f64, AnalysisError> {
    if !(epsilon > 0.0 && epsilon <= 0.2) {
        return Err(AnalysisError::InvalidInput(format!(
            "epsilon must lie in (0, 0.2], got {epsilon}"
        )));
    }
    let dt = epsilon / 50.0;
    let steps = (horizon / dt).ceil() as usize;
    let sample_every = (steps / 2000).max(1);
    let direct = integrate(
        &|t, s: &State4| rhs_inertial(t, s, epsilon),
        initial,
        0.0,
        horizon,
        dt,
        sample_every,
    )?;
    let (u0, du0, _) =
        guiding_center_derivatives(initial.pos, initial.vel, 0.0, epsilon);
    let averaged = integrate(
        &|_, s: &State4| rhs_averaged(s, epsilon),
        State4::new(u0, du0),
        0.0,
        horizon,
        dt,
        sample_every,
    )?;
    assert_eq!(direct.len(), averaged.len(), "same grid by construction");
    let mut max = 0.0f64;
    for (d, a) in direct.iter().zip(&averaged) {
        let u = guiding_center(d.state.pos, d.state.vel, d.t, epsilon);
        max = max.max((u - a.state.pos).norm());
    }
    Ok(max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_line_recovers_exact_lines() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (slope, intercept, rms) = fit_line(&xs, &ys);
        assert!((slope - 2.5).abs() < 1e-12);
        assert!((intercept + 1.0).abs() < 1e-12);
        assert!(rms < 1e-12);
    }

    #[test]
    fn residual_scan_rejects_bad_input() {
        let initial = State4::new(Vec2::new(1.0, 0.0), Vec2::ZERO);
        assert!(matches!(
            residual_scan(&[0.1], 30.0, initial),
            Err(AnalysisError::InvalidInput(_))
        ));
        assert!(matches!(
            residual_scan(&[0.1, 0.6], 30.0, initial),
            Err(AnalysisError::InvalidInput(_))
        ));
        assert!(matches!(
            residual_scan(&[0.2, 0.1], 10.0, initial),
            Err(AnalysisError::InvalidInput(_))
        ));
        assert!(matches!(
            residual_scan(&[0.1, 0.2, 0.1], 30.0, initial),
            Err(AnalysisError::InvalidInput(_))
        ));
        assert!(matches!(
            residual_scan(&[0.2, 0.1], 30.0, State4::new(Vec2::ZERO, Vec2::ZERO)),
            Err(AnalysisError::DegenerateInitial(_))
        ));
    }

    #[test]
    fn multipliers_pair_into_reciprocals() {
        // The flow is Hamiltonian, so multipliers come in (z, 1/z) pairs on
        // both sides of the threshold.
        for eps in [0.1, 1.5] {
            let report = floquet_stability(eps).unwrap();
            for m in report.multipliers {
                let inv = 1.0 / m;
                let gap = report
                    .multipliers
                    .iter()
                    .map(|o| (o - inv).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(gap < 1e-6, "eps {eps}: no reciprocal for {m}, gap {gap}");
            }
        }
    }

    #[test]
    fn threshold_is_insensitive_to_step_halving() {
        let coarse = bisect_threshold(0.98, 1.02, 100.0).unwrap();
        let fine = bisect_threshold(0.98, 1.02, 200.0).unwrap();
        let mid = |b: (f64, f64)| 0.5 * (b.0 + b.1);
        assert!(
            (mid(coarse) - mid(fine)).abs() < 1e-3,
            "thresholds {} vs {}",
            mid(coarse),
            mid(fine)
        );
    }

    #[test]
    fn constancy_holds_co_rotating_and_breaks_counter_rotating() {
        let r0 = Vec2::new(0.7, -0.4);
        let eps = 0.1;
        assert!(constancy_check(eps, r0, 500) < 1e-12);
        // Counter-rotating control: S(tau) R(-2 tau) r0 moves on a circle.
        let mut max = 0.0f64;
        let reference = saddle_matrix(0.0).mul_vec(r0);
        for j in 0..=500 {
            let tau = 5.0 * std::f64::consts::PI * j as f64 / 500.0;
            let value =
                saddle_matrix(tau).mul_vec(Mat2::rotation(-2.0 * tau).mul_vec(r0));
            max = max.max((value - reference).norm());
        }
        assert!(max > 0.5, "counter-rotating deviation {max} should be large");
    }

    #[test]
    fn unshifted_force_averages_to_zero() {
        // Without the eps^2 shift the mean force vanishes: avg(S) = 0.
        let x0 = Vec2::new(1.0, 0.0);
        let eps = 0.2;
        let n = 1024;
        let period = std::f64::consts::PI * eps;
        let mut sum = Vec2::ZERO;
        for j in 0..n {
            let tau = (period * j as f64 / n as f64) / eps;
            sum = sum + (-saddle_matrix(tau).mul_vec(x0));
        }
        assert!((sum * (1.0 / n as f64)).norm() < 1e-14);
    }

    #[test]
    fn mean_force_matches_prediction() {
        let (mean, predicted) = mean_force_check(Vec2::new(0.8, -0.5), 0.2);
        assert!((mean - predicted).norm() < 1e-14);
    }

    #[test]
    fn stability_grid_validates_range() {
        assert!(matches!(
            stability_grid(0.0, 1.0, 8),
            Err(AnalysisError::InvalidInput(_))
        ));
        assert!(matches!(
            stability_sweep(0.5, 1.5, 8),
            Err(AnalysisError::InvalidInput(_))
        ));
    }

    #[test]
    fn sweep_without_transition_errors() {
        let err = stability_sweep(0.3, 0.6, 16).unwrap_err();
        assert!(matches!(err, AnalysisError::NoTransition { .. }));
    }
}
