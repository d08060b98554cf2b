//! Shared helpers for the integration tests.

use saddletrap::dynamics::{State4, Vec2};
use saddletrap::linalg::Mat2;

/// Closed-form lab-frame trap solution built from the slower co-rotating
/// mode, used as an integration-free oracle.
///
/// In the co-rotating frame the equation is autonomous with mode
/// frequencies `nu^2 = omega^2 +- 1`. The `omega^2 - 1` branch is
/// `xi(t) = (cos nu t, -(nu/omega) sin nu t)`; mapping back through
/// `x = R(omega t) xi`, `v = R(omega t)(xi' + omega J xi)` solves the
/// lab-frame equation exactly. Requires `0 < epsilon < 1`. The initial
/// state is `x = (1, 0)`, `v = (0, epsilon)`.
pub fn exact_minus_mode(t: f64, epsilon: f64) -> State4 {
    let omega = 1.0 / epsilon;
    let nu = (omega * omega - 1.0).sqrt();
    let (s, c) = (nu * t).sin_cos();
    let xi = Vec2::new(c, -(nu / omega) * s);
    let dxi = Vec2::new(-nu * s, -(nu * nu / omega) * c);
    let r = Mat2::rotation(omega * t);
    State4::new(r.mul_vec(xi), r.mul_vec(dxi + xi.perp() * omega))
}

/// Least-squares slope of `ys` against `xs`.
#[allow(dead_code)] // not every test binary fits slopes
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}
