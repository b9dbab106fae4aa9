//! Continuum percolation on a Poisson point process where two points are
//! joined when their difference lies in a thin annulus (round or square).
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: annulus areas, exact overlap kernels and integral functionals;
//! * [`pointfield`]: Poisson sampling with a uniform-grid spatial index;
//! * [`graph`]: union-find clustering, crossing observables and induced paths;
//! * [`branching`]: Galton–Watson processes and the spatial branching walk;
//! * [`renorm`]: the block renormalization onto oriented bond percolation;
//! * [`harness`]: threshold estimation and the named property checks.
//!
//! Geometry and point-field types are generic over [`Scalar`] (`f32`/`f64`);
//! the aliases below fix them to `f64`, which is what the simulation drivers use.

// `!(x > 0.0)` is used on purpose so NaN is rejected along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branching;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod harness;
pub mod pointfield;
pub mod renorm;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::Norm;
pub use scalar::Scalar;

pub type Vec2 = geometry::Vec2<f64>;
pub type Annulus = geometry::Annulus<f64>;
pub type AnnulusF32 = geometry::Annulus<f32>;
pub type OverlapReport = geometry::OverlapReport<f64>;
pub type Box2 = pointfield::Box2<f64>;
pub type PointField = pointfield::PointField<f64>;
pub type TestedRegion = pointfield::TestedRegion<f64>;
pub type PercGraph<'a> = graph::PercGraph<'a, f64>;
