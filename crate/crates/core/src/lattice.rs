//! Lattice geometry, quenched atomic occupancy, and thermodynamic parameters.

use crate::error::Error;

/// Inverse temperature, hopping energy, and Trotter number.
///
/// Units are chosen with `t = 1`; the closed walk has `p` steps and every
/// step weight carries the argument `z = 2 beta t / p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoParams {
    pub beta: f64,
    pub t: f64,
    pub p: usize,
}

impl ThermoParams {
    pub fn new(beta: f64, t: f64, p: usize) -> Result<Self, Error> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::domain("beta must be finite and >= 0"));
        }
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::domain("hopping t must be finite and > 0"));
        }
        if p < 2 {
            return Err(Error::domain("Trotter number p must be >= 2"));
        }
        Ok(Self { beta, t, p })
    }

    /// Step-weight argument `z = 2 beta t / p`.
    pub fn step_arg(&self) -> f64 {
        2.0 * self.beta * self.t / self.p as f64
    }
}

/// Quenched atomic configuration: `L` sites, occupancy `n_j in {0,1}`, and
/// an on-site potential `epsilon` felt on occupied sites. Periodic in `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    occupancy: Vec<u8>,
    epsilon: f64,
}

impl LatticeConfig {
    /// All sites empty; the free particle.
    pub fn free(length: usize) -> Result<Self, Error> {
        if length == 0 {
            return Err(Error::config("lattice length must be >= 1"));
        }
        Ok(Self {
            occupancy: vec![0; length],
            epsilon: 0.0,
        })
    }

    /// Alternating occupancy with an atom on every odd site, matching the
    /// potential `V_j = epsilon` for odd `j`, `0` for even `j`.
    pub fn striped(length: usize, epsilon: f64) -> Result<Self, Error> {
        if length < 2 || !length.is_multiple_of(2) {
            return Err(Error::config(
                "striped pattern requires an even lattice length >= 2",
            ));
        }
        Self::explicit((0..length).map(|j| (j % 2) as u8).collect(), epsilon)
    }

    /// Arbitrary quenched occupancy.
    pub fn explicit(occupancy: Vec<u8>, epsilon: f64) -> Result<Self, Error> {
        if occupancy.is_empty() {
            return Err(Error::config("lattice length must be >= 1"));
        }
        if occupancy.iter().any(|&n| n > 1) {
            return Err(Error::config("occupancy entries must be 0 or 1"));
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::config("epsilon must be finite and >= 0"));
        }
        Ok(Self { occupancy, epsilon })
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Occupancy at (possibly negative) position `j`, reduced with the
    /// non-negative remainder so leftward-wandering walks see the same
    /// periodic pattern.
    pub fn occupancy_at(&self, j: i64) -> u8 {
        self.occupancy[j.rem_euclid(self.len() as i64) as usize]
    }

    /// On-site potential `epsilon * n_{j mod L}`.
    pub fn potential_at(&self, j: i64) -> f64 {
        self.epsilon * self.occupancy_at(j) as f64
    }

    /// True when the particle feels no potential anywhere.
    pub fn is_potential_free(&self) -> bool {
        self.epsilon == 0.0 || self.occupancy.iter().all(|&n| n == 0)
    }
}
