//! Closed-form canonical observables for the free particle in the infinite
//! lattice limit. These are the exact oracles the Monte Carlo engine is
//! validated against.

use crate::bessel::BesselTable;
use crate::error::Error;
use crate::lattice::ThermoParams;

/// Band energy `E(alpha) = 2t - 2t cos(2 pi alpha / L)` for `alpha = 1..=L`.
pub fn spectrum_at(alpha: usize, lattice_len: usize, t: f64) -> Result<f64, Error> {
    if alpha < 1 || alpha > lattice_len {
        return Err(Error::domain("spectrum index must satisfy 1 <= alpha <= L"));
    }
    let x = 2.0 * std::f64::consts::PI * alpha as f64 / lattice_len as f64;
    Ok(2.0 * t - 2.0 * t * x.cos())
}

fn table(params: &ThermoParams, max_order: usize) -> Result<BesselTable, Error> {
    BesselTable::build(2.0 * params.beta * params.t, max_order)
}

/// Partition function per site, `Z/L = e^{-2 beta t} I_0(2 beta t)`.
pub fn partition_per_site(params: &ThermoParams) -> Result<f64, Error> {
    table(params, 2)?.scaled(0)
}

/// Mean energy `<H> = 2t - 2t I_1(2 beta t) / I_0(2 beta t)`.
pub fn mean_energy(params: &ThermoParams) -> Result<f64, Error> {
    let t = params.t;
    Ok(2.0 * t * (1.0 - table(params, 2)?.ratio(1, 0)?))
}

/// Energy fluctuation per site,
/// `<H'^2> - <H'>^2 = 2t^2 + 2t^2 I_2/I_0 - 4t^2 (I_1/I_0)^2` at `2 beta t`.
pub fn energy_fluctuation(params: &ThermoParams) -> Result<f64, Error> {
    let tbl = table(params, 3)?;
    let t2 = params.t * params.t;
    let r1 = tbl.ratio(1, 0)?;
    let r2 = tbl.ratio(2, 0)?;
    Ok(2.0 * t2 + 2.0 * t2 * r2 - 4.0 * t2 * r1 * r1)
}

/// qp-qp correlation `G_1(n) = I_n(2 beta t) / I_0(2 beta t)`.
pub fn g1_exact(n: i64, params: &ThermoParams) -> Result<f64, Error> {
    table(params, n.unsigned_abs() as usize + 1)?.ratio(n, 0)
}

/// The tabulated exact observables backing the `exact free` CSV output.
#[derive(Debug, Clone)]
pub struct FreeObservables {
    pub z_per_site: f64,
    pub mean_energy: f64,
    pub energy_fluctuation: f64,
    pub g1: Vec<f64>,
}

impl FreeObservables {
    pub fn compute(params: &ThermoParams, n_max: usize) -> Result<Self, Error> {
        let tbl = table(params, n_max.max(2) + 1)?;
        let t = params.t;
        let t2 = t * t;
        let r1 = tbl.ratio(1, 0)?;
        let r2 = tbl.ratio(2, 0)?;
        Ok(Self {
            z_per_site: tbl.scaled(0)?,
            mean_energy: 2.0 * t * (1.0 - r1),
            energy_fluctuation: 2.0 * t2 + 2.0 * t2 * r2 - 4.0 * t2 * r1 * r1,
            g1: (0..=n_max as i64).map(|n| tbl.ratio(n, 0)).collect::<Result<_, _>>()?,
        })
    }
}
