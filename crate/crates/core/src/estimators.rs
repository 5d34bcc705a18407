//! Classical-isomorphism estimators evaluated per walk, and block-averaged
//! run statistics.
//!
//! All Bessel ratios for one run share a single table at `z = 2 beta t / p`;
//! its order covers the step cutoff plus the largest correlation offset, so
//! no walk produced by the sampler can step outside it.

use crate::bessel::BesselTable;
use crate::error::Error;
use crate::lattice::{LatticeConfig, ThermoParams};
use crate::walk::ClosedWalk;

/// Per-walk values of the classical estimators.
#[derive(Debug, Clone)]
pub struct ObservableSample {
    /// kinetic estimator `tau = 2t - (2t/p) sum_a I'_{s_a}/I_{s_a}`
    pub tau: f64,
    /// squared-kinetic estimator
    /// `tau_2 = (4t^2/p) sum I''/I - (8t^2/p) sum I'/I + 4t^2`
    pub tau2: f64,
    /// potential estimator `(1/p) sum_a eps n_{j_a mod L}`
    pub v: f64,
    /// `Gamma_1(n)`, n = 0..=n_max
    pub gamma1: Vec<f64>,
    /// `Gamma_2(n)`, n = 0..=n_max
    pub gamma2: Vec<f64>,
}

/// Shared evaluation context: thermodynamic constants plus the memoized
/// Bessel table sized for the run.
#[derive(Debug)]
pub struct EstimatorContext {
    t: f64,
    p: usize,
    n_max: usize,
    table: BesselTable,
}

impl EstimatorContext {
    /// `order_margin` must cover the largest |step| the sampler can emit.
    pub fn new(params: &ThermoParams, n_max: usize, max_step: i64) -> Result<Self, Error> {
        let order = max_step.unsigned_abs() as usize + n_max.max(2) + 2;
        Ok(Self {
            t: params.t,
            p: params.p,
            n_max,
            table: BesselTable::build(params.step_arg(), order)?,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `tau`: classical analogue of the kinetic energy.
    pub fn kinetic(&self, walk: &ClosedWalk) -> Result<f64, Error> {
        let mut sum = 0.0;
        for s in walk.steps() {
            sum += self.table.dlog1(s)?;
        }
        Ok(2.0 * self.t - (2.0 * self.t / self.p as f64) * sum)
    }

    /// `tau_2`: classical analogue of the squared tight-binding Hamiltonian.
    pub fn kinetic_sq(&self, walk: &ClosedWalk) -> Result<f64, Error> {
        let t2 = self.t * self.t;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for s in walk.steps() {
            d1 += self.table.dlog1(s)?;
            d2 += self.table.dlog2(s)?;
        }
        let p = self.p as f64;
        Ok(4.0 * t2 / p * d2 - 8.0 * t2 / p * d1 + 4.0 * t2)
    }

    /// `Gamma_1(n) = (1/p) sum_a I_{j_a - j_{a+1} - n}/I_{j_a - j_{a+1}}`;
    /// the stored step is `s_a = j_{a+1} - j_a`, so the index is `-s_a - n`.
    pub fn g1(&self, walk: &ClosedWalk, n: i64) -> Result<f64, Error> {
        let mut sum = 0.0;
        for s in walk.steps() {
            sum += self.table.ratio(-s - n, -s)?;
        }
        Ok(sum / self.p as f64)
    }

    /// All estimators for one walk.
    pub fn sample(&self, walk: &ClosedWalk, config: &LatticeConfig) -> Result<ObservableSample, Error> {
        let gamma1 = (0..=self.n_max as i64)
            .map(|n| self.g1(walk, n))
            .collect::<Result<_, _>>()?;
        let gamma2 = (0..=self.n_max as i64)
            .map(|n| g2_estimator(walk, n, config))
            .collect();
        Ok(ObservableSample {
            tau: self.kinetic(walk)?,
            tau2: self.kinetic_sq(walk)?,
            v: potential_estimator(walk, config),
            gamma1,
            gamma2,
        })
    }
}

/// `Gamma_2(n) = (1/p) sum_a n_{(j_a - n) mod L}`.
pub fn g2_estimator(walk: &ClosedWalk, n: i64, config: &LatticeConfig) -> f64 {
    let sum: u64 = walk
        .positions()
        .iter()
        .map(|&j| config.occupancy_at(j - n) as u64)
        .sum();
    sum as f64 / walk.len() as f64
}

/// Per-walk average on-site potential `(1/p) sum_a eps n_{j_a mod L}`.
pub fn potential_estimator(walk: &ClosedWalk, config: &LatticeConfig) -> f64 {
    let sum: f64 = walk.positions().iter().map(|&j| config.potential_at(j)).sum();
    sum / walk.len() as f64
}

/// Mean and standard error of one observable over blocks.
#[derive(Debug, Clone, Copy)]
pub struct Stat {
    pub mean: f64,
    pub std_err: f64,
}

impl Stat {
    fn from_blocks(blocks: &[f64]) -> Self {
        let n = blocks.len() as f64;
        let mean = blocks.iter().sum::<f64>() / n;
        let var = blocks.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (n - 1.0);
        Stat {
            mean,
            std_err: (var / n).sqrt(),
        }
    }
}

/// Block-averaged statistics for a run.
#[derive(Debug, Clone)]
pub struct RunStats {
    /// total energy `<tau> + <v>`
    pub energy: Stat,
    pub kinetic: Stat,
    pub potential: Stat,
    /// kinetic-sector fluctuation `<tau_2> - <tau>^2`; since `tau_2`
    /// estimates `<T^2>` this is the full energy fluctuation of the free
    /// particle, where `H = T`
    pub energy_fluct: Stat,
    pub g1: Vec<Stat>,
    pub g2: Vec<Stat>,
    pub block_size: usize,
    pub n_blocks: usize,
    pub acceptance: f64,
}

/// Default block size: `n/100`, floored at 50.
pub fn default_block_size(n_samples: usize) -> usize {
    (n_samples / 100).max(50)
}

/// Folds samples into blocks of `block_size` and reports per-block means.
/// Nonlinear combinations (energy fluctuation) are formed per block, then
/// averaged, so their bias vanishes with block count.
pub fn aggregate(samples: &[ObservableSample], block_size: usize) -> Result<RunStats, Error> {
    if block_size == 0 {
        return Err(Error::statistics("block size must be positive"));
    }
    let n_blocks = samples.len() / block_size;
    if n_blocks < 2 {
        return Err(Error::statistics(format!(
            "need at least 2 full blocks, have {} samples at block size {block_size}",
            samples.len()
        )));
    }
    let n_corr = samples.first().map_or(0, |s| s.gamma1.len());
    let mut tau_b = Vec::with_capacity(n_blocks);
    let mut v_b = Vec::with_capacity(n_blocks);
    let mut energy_b = Vec::with_capacity(n_blocks);
    let mut fluct_b = Vec::with_capacity(n_blocks);
    let mut g1_b = vec![Vec::with_capacity(n_blocks); n_corr];
    let mut g2_b = vec![Vec::with_capacity(n_blocks); n_corr];
    for block in samples.chunks_exact(block_size) {
        let m = block_size as f64;
        let tau = block.iter().map(|s| s.tau).sum::<f64>() / m;
        let tau2 = block.iter().map(|s| s.tau2).sum::<f64>() / m;
        let v = block.iter().map(|s| s.v).sum::<f64>() / m;
        tau_b.push(tau);
        v_b.push(v);
        energy_b.push(tau + v);
        fluct_b.push(tau2 - tau * tau);
        for n in 0..n_corr {
            g1_b[n].push(block.iter().map(|s| s.gamma1[n]).sum::<f64>() / m);
            g2_b[n].push(block.iter().map(|s| s.gamma2[n]).sum::<f64>() / m);
        }
    }
    Ok(RunStats {
        energy: Stat::from_blocks(&energy_b),
        kinetic: Stat::from_blocks(&tau_b),
        potential: Stat::from_blocks(&v_b),
        energy_fluct: Stat::from_blocks(&fluct_b),
        g1: g1_b.iter().map(|b| Stat::from_blocks(b)).collect(),
        g2: g2_b.iter().map(|b| Stat::from_blocks(b)).collect(),
        block_size,
        n_blocks,
        acceptance: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::StepSampler;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(beta: f64, p: usize) -> ThermoParams {
        ThermoParams::new(beta, 1.0, p).unwrap()
    }

    fn constant_walk(p: usize, site: i64) -> ClosedWalk {
        ClosedWalk::new(vec![site; p])
    }

    #[test]
    fn constant_walk_limits() {
        // all steps 0 at beta -> 0: tau -> 2t and tau2 -> <T^2> = 6t^2
        // (dlog2 -> 1/2, dlog1 -> 0), so tau2 - tau^2 -> 2t^2, the beta = 0
        // energy fluctuation
        let prm = params(1e-12, 8);
        let ctx = EstimatorContext::new(&prm, 4, 4).unwrap();
        let w = constant_walk(8, 3);
        let tau = ctx.kinetic(&w).unwrap();
        let tau2 = ctx.kinetic_sq(&w).unwrap();
        assert!((tau - 2.0).abs() < 1e-9);
        assert!((tau2 - 6.0).abs() < 1e-9);
        assert!((tau2 - tau * tau - 2.0).abs() < 1e-9);
        assert_eq!(ctx.g1(&w, 0).unwrap(), 1.0);
    }

    #[test]
    fn g1_zero_offset_is_one_for_any_walk() {
        let prm = params(2.0, 16);
        let mut sampler = StepSampler::new(&prm).unwrap();
        let ctx = EstimatorContext::new(&prm, 4, sampler.s_max()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let w = sampler.sample_closed_walk(0, &mut rng).unwrap();
            assert_eq!(ctx.g1(&w, 0).unwrap(), 1.0);
        }
    }

    #[test]
    fn g2_on_free_and_striped_lattices() {
        let free = LatticeConfig::free(10).unwrap();
        let striped = LatticeConfig::striped(10, 10.0).unwrap();
        // walk entirely on even (empty) sites
        let w = ClosedWalk::new(vec![0, 2, 4, 2]);
        assert_eq!(g2_estimator(&w, 0, &free), 0.0);
        assert_eq!(g2_estimator(&w, 0, &striped), 0.0);
        assert_eq!(g2_estimator(&w, 1, &striped), 1.0);
        assert_eq!(potential_estimator(&w, &striped), 0.0);
        let w_odd = ClosedWalk::new(vec![1, 3, 1, 3]);
        assert_eq!(potential_estimator(&w_odd, &striped), 10.0);
    }

    #[test]
    fn aggregate_constant_stream_has_zero_error() {
        let sample = ObservableSample {
            tau: 1.5,
            tau2: 2.0,
            v: 0.5,
            gamma1: vec![1.0, 0.5],
            gamma2: vec![0.25, 0.75],
        };
        let samples = vec![sample; 400];
        let stats = aggregate(&samples, 50).unwrap();
        assert_eq!(stats.n_blocks, 8);
        assert_eq!(stats.energy.mean, 2.0);
        assert_eq!(stats.energy.std_err, 0.0);
        assert_eq!(stats.g1[1].mean, 0.5);
        // fluct = tau2 - tau^2 = 2 - 2.25
        assert!((stats.energy_fluct.mean + 0.25).abs() < 1e-15);
    }

    #[test]
    fn aggregate_requires_two_blocks() {
        let sample = ObservableSample {
            tau: 0.0,
            tau2: 0.0,
            v: 0.0,
            gamma1: vec![],
            gamma2: vec![],
        };
        assert!(aggregate(&vec![sample.clone(); 99], 50).is_err());
        assert!(aggregate(&vec![sample; 100], 50).is_ok());
    }

    #[test]
    fn aggregate_iid_standard_error_scales() {
        // synthetic i.i.d. stream with known variance: SE ~ sigma/sqrt(N)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        use rand::Rng;
        let n = 20_000;
        let sigma = 2.0;
        let samples: Vec<ObservableSample> = (0..n)
            .map(|_| {
                let x: f64 = rng.gen::<f64>() - 0.5;
                ObservableSample {
                    tau: sigma * x * (12.0_f64).sqrt(), // unit variance scaled
                    tau2: 0.0,
                    v: 0.0,
                    gamma1: vec![],
                    gamma2: vec![],
                }
            })
            .collect();
        let stats = aggregate(&samples, 100).unwrap();
        let expected_se = sigma / (n as f64).sqrt();
        assert!(
            (stats.kinetic.std_err - expected_se).abs() < 0.2 * expected_se,
            "got {}, expected {expected_se}",
            stats.kinetic.std_err
        );
    }

    proptest! {
        #[test]
        fn g1_step_convention_reversal_identity(seed in 0u64..500) {
            // Reversing a walk negates its steps, so the opposite step-sign
            // convention evaluated on the same walk equals this convention
            // on the reversed walk: g1(rev w, n) = g1(w, -n) exactly. The
            // reversal is measure-preserving, so the convention choice is
            // observable-neutral in distribution.
            let prm = params(1.5, 12);
            let mut sampler = StepSampler::new(&prm).unwrap();
            let ctx = EstimatorContext::new(&prm, 6, sampler.s_max()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = sampler.sample_closed_walk(0, &mut rng).unwrap();
            let reversed = ClosedWalk::new(w.positions().iter().rev().copied().collect());
            for n in -6..=6 {
                let direct = ctx.g1(&w, -n).unwrap();
                let flipped = ctx.g1(&reversed, n).unwrap();
                prop_assert!((direct - flipped).abs() < 1e-12);
            }
        }

        #[test]
        fn g2_and_v_bounds(seed in 0u64..200) {
            let prm = params(1.0, 10);
            let config = LatticeConfig::striped(8, 7.0).unwrap();
            let mut sampler = StepSampler::new(&prm).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = sampler.sample_closed_walk(3, &mut rng).unwrap();
            for n in 0..6 {
                let g2 = g2_estimator(&w, n, &config);
                prop_assert!((0.0..=1.0).contains(&g2));
            }
            let v = potential_estimator(&w, &config);
            prop_assert!((0.0..=7.0).contains(&v));
        }
    }
}
