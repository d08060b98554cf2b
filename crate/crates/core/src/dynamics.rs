//! Equations of motion for a particle in a rotating saddle potential, the
//! frames they can be written in, and the guiding-center / hodograph maps
//! between those frames.
//!
//! Conventions: `epsilon` is the inverse rotation rate, the saddle matrix is
//! `S(tau) = [[cos 2tau, sin 2tau], [sin 2tau, -cos 2tau]]` with
//! `tau = t / epsilon`, and `J` is the counterclockwise quarter turn. All
//! states are `(position, velocity)` pairs in the plane.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::linalg::Vec2;
use crate::linalg::Mat2;

use crate::integrator::{self, IntegratorError, Sample};

/// Planar second-order state: position and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct State4 {
    pub pos: Vec2,
    pub vel: Vec2,
}

impl State4 {
    pub fn new(pos: Vec2, vel: Vec2) -> Self {
        State4 { pos, vel }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        State4::new(Vec2::new(a[0], a[1]), Vec2::new(a[2], a[3]))
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.pos.x, self.pos.y, self.vel.x, self.vel.y]
    }

    pub fn is_finite(self) -> bool {
        self.pos.is_finite() && self.vel.is_finite()
    }

    /// Max-norm over the four components.
    pub fn max_abs(self) -> f64 {
        self.to_array().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl From<[f64; 4]> for State4 {
    fn from(a: [f64; 4]) -> Self {
        State4::from_array(a)
    }
}

impl From<State4> for [f64; 4] {
    fn from(s: State4) -> [f64; 4] {
        s.to_array()
    }
}

impl std::ops::Add for State4 {
    type Output = State4;
    fn add(self, rhs: State4) -> State4 {
        State4::new(self.pos + rhs.pos, self.vel + rhs.vel)
    }
}

impl std::ops::Mul<f64> for State4 {
    type Output = State4;
    fn mul(self, s: f64) -> State4 {
        State4::new(self.pos * s, self.vel * s)
    }
}

/// Frame (equivalently, model) the trajectory is integrated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Full time-periodic equation in the lab frame.
    Inertial,
    /// Co-rotating frame: autonomous, with Coriolis and centrifugal terms.
    Rotating,
    /// Second-order averaged guiding-center equation.
    Averaged,
    /// Averaging done with the magnetic-like term's sign flipped; kept as a
    /// negative control, it precesses the wrong way.
    Naive,
    /// Lab-frame equation after the first velocity substitution; its
    /// solutions track the trap to one order better than the bare average.
    FirstNormalForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub epsilon: f64,
    pub t_end: f64,
    pub dt: f64,
    pub initial: State4,
    pub frame: Frame,
    /// Keep every n-th integration step (the final state is always kept).
    pub sample_every: usize,
}

impl SimConfig {
    /// Step size that resolves the forcing period `pi * epsilon` comfortably.
    pub fn default_dt(epsilon: f64) -> f64 {
        epsilon / 50.0
    }

    pub fn new(epsilon: f64, t_end: f64) -> Self {
        SimConfig {
            epsilon,
            t_end,
            dt: Self::default_dt(epsilon),
            initial: State4::new(Vec2::new(1.0, 0.0), Vec2::ZERO),
            frame: Frame::Inertial,
            sample_every: 1,
        }
    }

    /// `epsilon` must lie in (0, 1): the trap is unstable beyond 1, and the
    /// step bound below assumes a fast timescale to resolve. `dt` must not
    /// exceed `epsilon / 20`.
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::InvalidConfig(msg));
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 || self.epsilon >= 1.0 {
            return fail(format!(
                "epsilon must lie strictly between 0 and 1, got {}",
                self.epsilon
            ));
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return fail(format!("t_end must be positive, got {}", self.t_end));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 || self.dt > self.epsilon / 20.0 {
            return fail(format!(
                "dt must lie in (0, epsilon/20] = (0, {}], got {}",
                self.epsilon / 20.0,
                self.dt
            ));
        }
        if self.sample_every == 0 {
            return fail("sample_every must be at least 1".to_string());
        }
        if !self.initial.is_finite() {
            return fail("initial state must be finite".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Integration(#[from] IntegratorError),
}

/// Time-stamped states produced by [`simulate`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

/// Saddle matrix at fast time `tau`; rotates with angular rate 1 in `tau`,
/// completing a half turn (and one full period of the potential) in `pi`.
pub fn saddle_matrix(tau: f64) -> Mat2 {
    let (s, c) = (2.0 * tau).sin_cos();
    Mat2([[c, s], [s, -c]])
}

/// Lab frame: `x'' = -S(t/eps) x`.
pub fn rhs_inertial(t: f64, state: &State4, epsilon: f64) -> State4 {
    let force = -saddle_matrix(t / epsilon).mul_vec(state.pos);
    State4::new(state.vel, force)
}

/// Co-rotating frame: `xi'' = -2 omega J xi' + (omega^2 I - S(0)) xi` with
/// `omega = 1/eps`. Autonomous; used as the cross-check frame.
pub fn rhs_rotating(state: &State4, epsilon: f64) -> State4 {
    let omega = 1.0 / epsilon;
    let coriolis = state.vel.perp() * (-2.0 * omega);
    let centrifugal = state.pos * (omega * omega);
    let saddle = Vec2::new(state.pos.x, -state.pos.y); // S(0) x
    State4::new(state.vel, coriolis + centrifugal - saddle)
}

/// Guiding-center equation: `u'' = -(eps^2/4) u + (eps^3/4) J u'`.
pub fn rhs_averaged(state: &State4, epsilon: f64) -> State4 {
    let e2 = epsilon * epsilon;
    let acc = state.pos * (-e2 / 4.0) + state.vel.perp() * (e2 * epsilon / 4.0);
    State4::new(state.vel, acc)
}

/// Averaging with the first-order term's sign botched: the restoring force
/// is right but the precession runs backwards.
pub fn rhs_naive(state: &State4, epsilon: f64) -> State4 {
    let e2 = epsilon * epsilon;
    let acc = state.pos * (-e2 / 4.0) + state.vel.perp() * (-e2 * epsilon / 4.0);
    State4::new(state.vel, acc)
}

/// System produced by the position change `x = (I + (eps^2/4) S) x1`:
/// `x1'' = eps S J x1' - (eps^2/4) x1 - (eps^3/4) J x1' + (eps^4/16) S x1`,
/// valid up to an O(eps^5) defect.
pub fn rhs_first_normal_form(t: f64, state: &State4, epsilon: f64) -> State4 {
    let s = saddle_matrix(t / epsilon);
    let e2 = epsilon * epsilon;
    let jv = state.vel.perp();
    let acc = s.mul_vec(jv) * epsilon + state.pos * (-e2 / 4.0)
        + jv * (-e2 * epsilon / 4.0)
        + s.mul_vec(state.pos) * (e2 * e2 / 16.0);
    State4::new(state.vel, acc)
}

/// Position half of the first transform: `x = (I + (eps^2/4) S(t/eps)) x1`.
pub fn first_transform(x1: Vec2, t: f64, epsilon: f64) -> Vec2 {
    let a = epsilon * epsilon / 4.0;
    x1 + saddle_matrix(t / epsilon).mul_vec(x1) * a
}

/// Exact inverse of [`first_transform`]: since `S^2 = I`,
/// `(I + a S)^{-1} = (I - a S) / (1 - a^2)`.
pub fn first_transform_inverse(x: Vec2, t: f64, epsilon: f64) -> Vec2 {
    let a = epsilon * epsilon / 4.0;
    (x - saddle_matrix(t / epsilon).mul_vec(x) * a) * (1.0 / (1.0 - a * a))
}

/// Full state map of the first transform. Velocities pick up the frame
/// derivative: `v = (I + a S) v1 - (eps/2) S J x1`.
pub fn first_transform_state(state: &State4, t: f64, epsilon: f64) -> State4 {
    let s = saddle_matrix(t / epsilon);
    let a = epsilon * epsilon / 4.0;
    let x = state.pos + s.mul_vec(state.pos) * a;
    let v = state.vel + s.mul_vec(state.vel) * a - s.mul_vec(state.pos.perp()) * (epsilon / 2.0);
    State4::new(x, v)
}

/// Exact inverse of [`first_transform_state`].
pub fn first_transform_state_inverse(state: &State4, t: f64, epsilon: f64) -> State4 {
    let s = saddle_matrix(t / epsilon);
    let a = epsilon * epsilon / 4.0;
    let inv = |w: Vec2| (w - s.mul_vec(w) * a) * (1.0 / (1.0 - a * a));
    let x1 = inv(state.pos);
    let v1 = inv(state.vel + s.mul_vec(x1.perp()) * (epsilon / 2.0));
    State4::new(x1, v1)
}

/// Guiding center of a lab-frame state:
/// `u = x - (eps^2/4) S(t/eps) (x - eps J v)`.
pub fn guiding_center(x: Vec2, v: Vec2, t: f64, epsilon: f64) -> Vec2 {
    let a = epsilon * epsilon / 4.0;
    x - saddle_matrix(t / epsilon).mul_vec(x - v.perp() * epsilon) * a
}

/// Guiding-center extraction from first-normal-form coordinates:
/// `u = x1 + (eps^3/4) S(t/eps) J v1`.
///
/// This inverts, to O(eps^4), the composed transform's position row
/// `[I, -(eps^3/4) S J]` (that row maps averaged coordinates the other
/// way). The plus sign is forced: it is what cancels the O(eps) fast term
/// of the first normal form, and composing with
/// [`first_transform_state_inverse`] then reproduces [`guiding_center`] up
/// to O(eps^4).
pub fn hodograph(x1: Vec2, v1: Vec2, t: f64, epsilon: f64) -> Vec2 {
    let e3 = epsilon * epsilon * epsilon;
    x1 + saddle_matrix(t / epsilon).mul_vec(v1.perp()) * (e3 / 4.0)
}

/// Guiding center together with its first two time derivatives along a
/// lab-frame solution through `(x, v)` at time `t`. Closed forms obtained by
/// differentiating [`guiding_center`] and substituting `x'' = -S x`:
///
/// ```text
/// u'  = v + (eps/2) S J x + (eps^2/4) S v + (eps^3/4) J x
/// u'' = -(eps^2/4) x + (eps^3/4) J v
/// ```
pub fn guiding_center_derivatives(
    x: Vec2,
    v: Vec2,
    t: f64,
    epsilon: f64,
) -> (Vec2, Vec2, Vec2) {
    let s = saddle_matrix(t / epsilon);
    let e2 = epsilon * epsilon;
    let u = guiding_center(x, v, t, epsilon);
    let du = v
        + s.mul_vec(x.perp()) * (epsilon / 2.0)
        + s.mul_vec(v) * (e2 / 4.0)
        + x.perp() * (e2 * epsilon / 4.0);
    let ddu = x * (-e2 / 4.0) + v.perp() * (e2 * epsilon / 4.0);
    (u, du, ddu)
}

/// Lab state to co-rotating state at time `t`.
pub fn inertial_to_rotating(state: &State4, t: f64, epsilon: f64) -> State4 {
    let omega = 1.0 / epsilon;
    let back = Mat2::rotation(-omega * t);
    let xi = back.mul_vec(state.pos);
    let xidot = back.mul_vec(state.vel) - xi.perp() * omega;
    State4::new(xi, xidot)
}

/// Co-rotating state to lab state at time `t`.
pub fn rotating_to_inertial(state: &State4, t: f64, epsilon: f64) -> State4 {
    let omega = 1.0 / epsilon;
    let fwd = Mat2::rotation(omega * t);
    let x = fwd.mul_vec(state.pos);
    let v = fwd.mul_vec(state.vel + state.pos.perp() * omega);
    State4::new(x, v)
}

/// Integrates the configured frame with fixed-step RK4 and returns the
/// sampled trajectory. Fails on invalid configuration or if the state stops
/// being finite (blow-up).
pub fn simulate(config: &SimConfig) -> Result<Trajectory, SimError> {
    config.validate()?;
    let eps = config.epsilon;
    let rhs = move |t: f64, s: &State4| match config.frame {
        Frame::Inertial => rhs_inertial(t, s, eps),
        Frame::Rotating => rhs_rotating(s, eps),
        Frame::Averaged => rhs_averaged(s, eps),
        Frame::Naive => rhs_naive(s, eps),
        Frame::FirstNormalForm => rhs_first_normal_form(t, s, eps),
    };
    let samples = integrator::integrate(
        &rhs,
        config.initial,
        0.0,
        config.t_end,
        config.dt,
        config.sample_every,
    )?;
    Ok(Trajectory { samples })
}
