//! Symmetries of the Kepler problem: conserved quantities, Lie point and
//! dynamical symmetry generators, their Poisson-bracket algebra, and the
//! finite transformations generated by the Laplace-Runge-Lenz vector.

pub mod constants;
pub mod brackets;
pub mod cli;
pub mod diff;
pub mod error;
pub mod flow;
pub mod generators;
pub mod kepler;
pub mod sampling;
pub mod transforms;
pub mod verify;

pub use constants::{Axis, Constant};
pub use error::{KeplerError, Result};
pub use kepler::{ConservedSet, ExtendedState, KeplerSystem, PhaseState, Vec3};
