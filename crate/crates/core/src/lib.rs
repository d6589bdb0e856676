//! Phase-field fracture on 2-D plane-strain quadrilateral meshes.
//!
//! The crate couples a displacement field `u` and a crack phase field `phi`
//! (AT2 regularisation, hybrid history-field formulation) and solves the
//! coupled problem either monolithically, with a BFGS quasi-Newton update of
//! the block-diagonal tangent, or with a one-pass staggered scheme. Fatigue
//! (cumulative history variable) and implicit Backward Euler dynamics are
//! layered on the same element kernels.
//!
//! Units are N, mm, MPa, s throughout; density is in tonne/mm^3.

pub mod bench;
pub mod dynamics;
pub mod error;
pub mod fatigue;
pub mod fem;
pub mod mesh;
pub mod solvers;
pub mod system;
pub mod vtk;

pub use error::{Error, Result};
