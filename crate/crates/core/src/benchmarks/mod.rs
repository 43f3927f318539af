//! Reference quasi-stationary distributions and the measure distance used
//! to compare simulations against them.

mod bessel;
mod fd;
mod ks;
mod reference;

pub use bessel::{bessel_j0, bessel_j1, first_zero_j0};
pub use fd::{fd_eigensolver, FdGeometry, FdSolution, MIN_GRID};
pub use ks::ks_distance;
pub use reference::{
    reference_bm_disk, reference_bm_interval, Coordinate, ReferenceQSD, Shape, REFERENCE_NAMES,
};
