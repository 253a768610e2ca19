//! Energy-stable parametric finite element schemes for Willmore (elastic)
//! flow of closed planar curves, with tangential vertex motion that drives
//! polygons toward equidistributed edge lengths.
//!
//! Every time step solves for four piecewise-linear fields on the periodic
//! reference mesh: the normal velocity, an evolved curvature, the new vertex
//! positions and a second curvature that ties the positions to the polygon
//! shape. See [`schemes`] for the four steppers and [`harness`] for the
//! canned experiments.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod initial;
pub mod schemes;
pub mod sparse;

pub use error::{Error, Result};
pub use geometry::{ClosedCurve, Vec2};
pub use schemes::{SchemeConfig, SchemeState, StepResult, Variant};
