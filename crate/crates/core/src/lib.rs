//! Discrete path-integral Monte Carlo for a single quantum particle on a 1D
//! tight-binding lattice, together with the closed-form solutions that make
//! every Monte Carlo estimate checkable against an exact oracle.
//!
//! The particle in the canonical ensemble is isomorphic to a closed p-step
//! variable-step random walk weighted by modified Bessel functions; a
//! quenched on-site potential enters through a Gibbs factor handled by
//! Metropolis rejection. The striped (alternating) potential admits a full
//! two-band Bloch solution used as the interacting oracle.

pub mod bessel;
pub mod error;
pub mod estimators;
pub mod exact_free;
pub mod exact_striped;
pub mod experiment;
pub mod lattice;
pub mod walk;

pub use error::Error;
pub use lattice::{LatticeConfig, ThermoParams};
pub use walk::ClosedWalk;
