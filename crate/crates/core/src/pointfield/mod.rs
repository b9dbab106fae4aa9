//! Poisson point fields in rectangles or tori with a uniform-grid index, and
//! the tested-region structure used by the renormalization.

mod field;
mod io;
mod tested;

pub use field::{sample_poisson_count, Box2, PointField, Topology};
pub use tested::TestedRegion;
