//! Numerical laboratory for the energy of rotating condensates in a harmonic
//! trap: profiles, vortex-lattice trial states, constrained minimisation and
//! vortex analysis on uniform grids.

pub mod cell;
pub mod error;
pub mod experiment;
pub mod field;
pub mod optim;
pub mod params;
pub mod profile;
pub mod solver;
pub mod trial;
pub mod vortex;

pub use error::{Error, Result};
pub use field::{ComplexField, Grid2D, ScalarField};
pub use params::{derive_params, DerivedParams, PhysicalParams};
