//! Numerical laboratory for spherically symmetric isentropic compressible
//! Navier-Stokes flow in a ball.
//!
//! The crate couples a Lagrangian mass-coordinate solver with runtime
//! verification of the quantitative estimates the flow obeys: the sharp
//! radial gradient bounds, weighted interpolation (CKN) inequality
//! feasibility, energy dissipation, the multiplicative density
//! representation along particle paths, and the discrete Gronwall
//! contraction behind uniqueness.
//!
//! All numerics are generic over the scalar type via [`scalar::Scalar`]
//! (`f32` or `f64`); the aliases at the crate root pin the common
//! double-precision instantiation.

// `!(x > y)` comparisons are deliberate: they reject NaN, which the
// sign-flipped form would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ckn;
pub mod density;
pub mod error;
pub mod numerics;
pub mod radial;
pub mod scalar;
pub mod sharp;
pub mod solver;
pub mod uniqueness;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases for the main domain types.
pub type Grid64 = radial::RadialGrid<f64>;
pub type Profile64 = radial::RadialProfile<f64>;
pub type State64 = solver::LagrangianState<f64>;
pub type Trajectory64 = density::Trajectory<f64>;

/// Single-precision aliases.
pub type Grid32 = radial::RadialGrid<f32>;
pub type Profile32 = radial::RadialProfile<f32>;
pub type State32 = solver::LagrangianState<f32>;
pub type Trajectory32 = density::Trajectory<f32>;
