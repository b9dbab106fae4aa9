//! Block renormalization: the bond-open exploration on `6R x 6R` blocks,
//! the parameter calculus behind it, the oriented-lattice driver and a
//! reference independent oriented percolation.

mod explore;
mod lattice;
mod params;
mod run;
mod verify;

pub use explore::{bond_explore, BondOutcome};
pub use lattice::{oriented_bond_percolation, BlockLattice, Bond, Rect, Site};
pub use params::{
    cap_for_horizon, min_ratio_for_growth, min_seed_count, Constants, ConstraintFlags, Overrides,
    RenormParams,
};
pub use run::{
    initial_points, lattice_run, BondRecord, CouplingReport, LatticeConfig, LatticeTrace, Mode,
};
pub use verify::{first_close_pair, locality_field, locality_replay, verify_bond, ConditionReport};
