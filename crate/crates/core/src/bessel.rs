//! Scaled modified Bessel functions of the first kind, integer order.
//!
//! Everything downstream (walk weights, kinetic estimators, free-particle
//! observables) consumes ratios of `I_n(z)`, so the table stores the scaled
//! values `e^{-z} I_n(z)`. The scale factor cancels in every ratio and the
//! stored values stay in (0, 1] for any argument, which keeps runs with
//! `beta` up to 100 free of overflow.

use crate::error::Error;

/// Table of `e^{-z} I_n(z)` for `n = 0..=max_order`.
///
/// Negative orders are folded in through `I_{-n}(z) = I_n(z)`.
#[derive(Debug, Clone)]
pub struct BesselTable {
    z: f64,
    scaled: Vec<f64>,
}

impl BesselTable {
    /// Builds the table by downward (Miller) recurrence, normalized with the
    /// sum identity `sum_s I_s(z) = e^z`. Upward recurrence is unstable for
    /// orders above `z`, downward is self-correcting.
    pub fn build(z: f64, max_order: usize) -> Result<Self, Error> {
        if !z.is_finite() {
            return Err(Error::domain("bessel argument must be finite"));
        }
        if z < 0.0 {
            return Err(Error::domain("bessel argument must be non-negative"));
        }
        let max_order = max_order.max(2);

        if z == 0.0 {
            let mut scaled = vec![0.0; max_order + 1];
            scaled[0] = 1.0;
            return Ok(Self { z, scaled });
        }

        // Start the recurrence far enough above both the requested order and
        // the turnover point n ~ z that the seed error has fully damped out.
        let start = (max_order as f64).max(z).ceil() as usize + 40;
        let mut values = vec![0.0; start + 1];
        let mut above = 0.0_f64; // I_{n+1} (unnormalized)
        let mut here = 1e-30_f64; // I_n (unnormalized seed)
        values[start] = here;
        for n in (1..=start).rev() {
            let below = above + (2.0 * n as f64 / z) * here;
            above = here;
            here = below;
            values[n - 1] = here;
            if here > 1e280 {
                let inv = 1e-280;
                for v in values[n - 1..].iter_mut() {
                    *v *= inv;
                }
                above *= inv;
                here *= inv;
            }
        }

        // sum_s I_s = I_0 + 2 sum_{n>=1} I_n = e^z, so dividing by the sum
        // yields the scaled values directly. Sum smallest-first.
        let tail: f64 = values.iter().skip(1).rev().sum();
        let norm = values[0] + 2.0 * tail;
        let scaled = values[..=max_order.min(start)]
            .iter()
            .map(|v| v / norm)
            .chain(std::iter::repeat(0.0))
            .take(max_order + 1)
            .collect();
        Ok(Self { z, scaled })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn max_order(&self) -> usize {
        self.scaled.len() - 1
    }

    /// `e^{-z} I_n(z)`, accepting negative `n` by symmetry.
    pub fn scaled(&self, n: i64) -> Result<f64, Error> {
        self.scaled
            .get(n.unsigned_abs() as usize)
            .copied()
            .ok_or_else(|| Error::range(n, self.max_order()))
    }

    /// `I_n(z) / I_m(z)`; the scale factors cancel.
    pub fn ratio(&self, n: i64, m: i64) -> Result<f64, Error> {
        Ok(self.scaled(n)? / self.scaled(m)?)
    }

    /// `I'_n(z) / I_n(z) = (I_{n-1}(z) + I_{n+1}(z)) / (2 I_n(z))`,
    /// the averaged form of the two derivative recurrences.
    pub fn dlog1(&self, n: i64) -> Result<f64, Error> {
        let m = n.abs();
        Ok((self.scaled(m - 1)? + self.scaled(m + 1)?) / (2.0 * self.scaled(m)?))
    }

    /// `I''_n(z) / I_n(z) = (I_{n-2}(z) + 2 I_n(z) + I_{n+2}(z)) / (4 I_n(z))`,
    /// from applying the derivative recurrence twice.
    pub fn dlog2(&self, n: i64) -> Result<f64, Error> {
        let m = n.abs();
        Ok((self.scaled(m - 2)? + 2.0 * self.scaled(m)? + self.scaled(m + 2)?)
            / (4.0 * self.scaled(m)?))
    }

    /// Smallest cutoff `S` such that the neglected step-weight tail
    /// `1 - sum_{|s| <= S} e^{-z} I_s(z)` is below `tol`.
    pub fn tail_cutoff(&self, tol: f64) -> usize {
        let mut covered = self.scaled[0];
        for s in 1..self.scaled.len() {
            if 1.0 - covered < tol {
                return s - 1;
            }
            covered += 2.0 * self.scaled[s];
        }
        self.max_order()
    }
}
