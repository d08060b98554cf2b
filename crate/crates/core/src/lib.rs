//! Simulation and machine verification for a particle in a rotating saddle
//! potential.
//!
//! The crate has two halves that deliberately do not share code paths:
//!
//! * an exact half ([`algebra`], [`verifier`]) that manipulates matrices of
//!   trigonometric polynomials with arbitrary-precision rational coefficients
//!   and certifies the guiding-center reduction identities symbolically, and
//! * a numeric half ([`dynamics`], [`integrator`], [`analysis`]) that
//!   integrates the equations of motion in several frames and measures the
//!   predictions those identities make (residual scaling, Floquet stability,
//!   prograde precession).
//!
//! Agreement between the two halves is what the test suite is for.

pub mod algebra;
pub mod analysis;
pub mod dynamics;
pub mod integrator;
pub mod linalg;
pub mod par;
pub mod verifier;
