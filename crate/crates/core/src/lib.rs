//! Coverage path planning for an agent carrying a gimbaled, zoomable camera
//! with a triangular footprint.
//!
//! The crate covers the full pipeline: geometry primitives, agent dynamics,
//! camera footprints, scenario construction, ray-cast visibility and its
//! learned per-cell table, the mixed-integer quadratic program with checker
//! and LP export, a reference branch-and-bound solver, and plan validation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environment;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod model;
pub mod planner;
pub mod sensing;
pub mod solver;
pub mod visibility;

pub use error::{Error, Result};
