//! Fixed-step RK4 integration, monodromy matrices, and eigenvalues of 4x4
//! real matrices via the characteristic quartic.

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::State4;
use crate::linalg::Mat4;

/// States larger than this count as blown up even while still finite.
const BLOWUP_LIMIT: f64 = 1e100;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("state blew up at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid integration window: {0}")]
    InvalidStep(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: State4,
}

fn rk4_step(rhs: &impl Fn(f64, &State4) -> State4, t: f64, state: &State4, dt: f64) -> State4 {
    let k1 = rhs(t, state);
    let k2 = rhs(t + dt / 2.0, &(*state + k1 * (dt / 2.0)));
    let k3 = rhs(t + dt / 2.0, &(*state + k2 * (dt / 2.0)));
    let k4 = rhs(t + dt, &(*state + k3 * dt));
    *state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Integrates `state' = rhs(t, state)` from `t0` to exactly `t_end` with
/// fixed step `dt`; a shorter final step lands on `t_end`. Keeps the initial
/// state, every `sample_every`-th step, and the final state. Step times are
/// computed as `t0 + i * dt`, not accumulated, so sampling grids of separate
/// runs coincide bitwise.
pub fn integrate(
    rhs: &impl Fn(f64, &State4) -> State4,
    initial: State4,
    t0: f64,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Vec<Sample>, IntegratorError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(IntegratorError::InvalidStep(format!(
            "dt must be positive and finite, got {dt}"
        )));
    }
    if !(t_end > t0) {
        return Err(IntegratorError::InvalidStep(format!(
            "t_end {t_end} must exceed t0 {t0}"
        )));
    }
    let sample_every = sample_every.max(1);
    let span = t_end - t0;
    let n_full = (span / dt).floor() as usize;
    // Final partial step only if t0 + n_full * dt falls short of t_end.
    let tail = span - n_full as f64 * dt;
    let has_tail = tail > dt * 1e-12;

    let mut samples = Vec::with_capacity(n_full / sample_every + 2);
    let mut state = initial;
    samples.push(Sample { t: t0, state });
    for i in 0..n_full {
        let t = t0 + i as f64 * dt;
        state = rk4_step(rhs, t, &state, dt);
        if !state.is_finite() || state.max_abs() > BLOWUP_LIMIT {
            return Err(IntegratorError::NonFinite { t: t + dt });
        }
        let is_last = i + 1 == n_full && !has_tail;
        if (i + 1) % sample_every == 0 && !is_last {
            samples.push(Sample {
                t: t0 + (i + 1) as f64 * dt,
                state,
            });
        }
    }
    if has_tail {
        let t = t0 + n_full as f64 * dt;
        state = rk4_step(rhs, t, &state, tail);
        if !state.is_finite() || state.max_abs() > BLOWUP_LIMIT {
            return Err(IntegratorError::NonFinite { t: t_end });
        }
    }
    if n_full > 0 || has_tail {
        samples.push(Sample { t: t_end, state });
    }
    Ok(samples)
}

/// Fundamental solution over `[0, period]`: integrates the four canonical
/// basis states and assembles them as columns.
pub fn monodromy(
    rhs: &impl Fn(f64, &State4) -> State4,
    period: f64,
    dt: f64,
) -> Result<Mat4, IntegratorError> {
    let mut cols = [[0.0; 4]; 4];
    for (j, col) in cols.iter_mut().enumerate() {
        let mut e = [0.0; 4];
        e[j] = 1.0;
        let samples = integrate(rhs, State4::from_array(e), 0.0, period, dt, usize::MAX)?;
        *col = samples.last().unwrap().state.to_array();
    }
    Ok(Mat4::from_cols(cols))
}

/// Coefficients `[c3, c2, c1, c0]` of the characteristic polynomial
/// `l^4 + c3 l^3 + c2 l^2 + c1 l + c0`, by the Faddeev-LeVerrier recurrence.
fn characteristic(m: &Mat4) -> [f64; 4] {
    let mut coeffs = [0.0; 4];
    let mut b = *m;
    let mut c = -b.trace();
    coeffs[0] = c;
    for k in 2..=4 {
        let shifted = b.add(&Mat4::identity().scale(c));
        b = m.mul(&shifted);
        c = -b.trace() / k as f64;
        coeffs[k - 1] = c;
    }
    coeffs
}

/// Largest real root of `u^3 + b u^2 + c u + d`.
fn cubic_max_real_root(b: f64, c: f64, d: f64) -> f64 {
    // Depress: u = w - b/3.
    let p = c - b * b / 3.0;
    let q = 2.0 * b.powi(3) / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    let disc = q * q / 4.0 + p.powi(3) / 27.0;
    if disc > 0.0 {
        // One real root (Cardano).
        let sq = disc.sqrt();
        let w = (-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt();
        w + shift
    } else {
        // Three real roots (trigonometric form); the k = 0 branch is largest.
        let r = (-p / 3.0).max(0.0).sqrt();
        if r == 0.0 {
            return shift;
        }
        let phi = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0).acos();
        2.0 * r * (phi / 3.0).cos() + shift
    }
}

/// Roots of `l^4 + c3 l^3 + c2 l^2 + c1 l + c0` with real coefficients, via
/// Ferrari's factorization plus a short complex Newton polish. Returned
/// sorted by (re, im) so output order is deterministic.
pub fn solve_quartic(coeffs: [f64; 4]) -> [Complex64; 4] {
    let [c3, c2, c1, c0] = coeffs;
    // Depress: l = y - c3/4 gives y^4 + p y^2 + q y + r.
    let a = c3 / 4.0;
    let p = c2 - 6.0 * a * a;
    let q = c1 - 2.0 * c2 * a + 8.0 * a.powi(3);
    let r = c0 - c1 * a + c2 * a * a - 3.0 * a.powi(4);

    let scale = 1.0f64.max(p.abs()).max(q.abs()).max(r.abs());
    let mut roots = if q.abs() <= 1e-12 * scale {
        // Biquadratic: y^2 solves a quadratic.
        let disc = Complex64::new(p * p - 4.0 * r, 0.0).sqrt();
        let y2a = (-Complex64::new(p, 0.0) + disc) / 2.0;
        let y2b = (-Complex64::new(p, 0.0) - disc) / 2.0;
        [y2a.sqrt(), -y2a.sqrt(), y2b.sqrt(), -y2b.sqrt()]
    } else {
        // Ferrari: y^4 + p y^2 + q y + r = (y^2 + alpha y + beta)(y^2 - alpha y + gamma)
        // with u = alpha^2 a positive root of the resolvent cubic.
        let u = cubic_max_real_root(2.0 * p, p * p - 4.0 * r, -q * q).max(0.0);
        let alpha = u.sqrt();
        let beta = (p + u - q / alpha) / 2.0;
        let gamma = (p + u + q / alpha) / 2.0;
        let d1 = Complex64::new(alpha * alpha - 4.0 * beta, 0.0).sqrt();
        let d2 = Complex64::new(alpha * alpha - 4.0 * gamma, 0.0).sqrt();
        [
            (Complex64::new(-alpha, 0.0) + d1) / 2.0,
            (Complex64::new(-alpha, 0.0) - d1) / 2.0,
            (Complex64::new(alpha, 0.0) + d2) / 2.0,
            (Complex64::new(alpha, 0.0) - d2) / 2.0,
        ]
    };
    for y in &mut roots {
        *y -= a;
    }

    // Newton polish on the undepressed quartic; a few steps suffice and a
    // tiny derivative (multiple root) leaves the Ferrari value in place.
    let f = |l: Complex64| ((l + c3) * l + c2) * l * l + c1 * l + c0;
    let df = |l: Complex64| ((4.0 * l + 3.0 * c3) * l + 2.0 * c2) * l + c1;
    for root in &mut roots {
        for _ in 0..3 {
            let d = df(*root);
            if d.norm() < 1e-10 {
                break;
            }
            *root -= f(*root) / d;
        }
    }
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    roots
}

/// Eigenvalues of a real 4x4 matrix, deterministically ordered.
pub fn eigen4(m: &Mat4) -> [Complex64; 4] {
    solve_quartic(characteristic(m))
}
