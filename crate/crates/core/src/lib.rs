//! Gradient climbing by a helically swimming cell.
//!
//! A rigid swimmer spins at constant body rates and traces a helix. A band-pass
//! signaling model with adaptive gain turns the concentration it samples into
//! a feedback signal that modulates those rates. This crate integrates that
//! closed loop, provides the exact averaged-frame kinematics that expose the
//! demodulation, and checks the resulting gradient-climbing behavior.

// NaN must fail these range checks, so the negated forms are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod averaging;
pub mod config;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod kinematics;
pub mod ode;
pub mod signaling;
pub mod sim;
pub mod sweep;

pub use config::RunConfig;
pub use error::ParamError;
pub use field::{FieldSpec, FieldVariant, NoiseKind, NoiseSpec};
pub use geometry::{Mat3, Vec3};
pub use kinematics::{AveragedPose, Pose, SwimmerParams};
pub use signaling::{FilterParams, FilterState};
pub use sim::{SimConfig, Trajectory, TrajectoryRow};
