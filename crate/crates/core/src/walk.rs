//! Closed variable-step random walks with the free-particle Bessel measure,
//! bridge resampling of contiguous segments, and Metropolis acceptance for
//! quenched potentials.
//!
//! A fresh walk is grown step by step from the exact conditional law
//! `P(s | r remaining, residual d) ∝ I_s(z) I_{d+s}((r-1) z)`,
//! `z = 2 beta t / p`; the same quotient with the residual measured against
//! a pinned displacement yields the bridge that redraws a segment while
//! holding its endpoints fixed. Steps are truncated at a cutoff chosen so
//! the neglected Bessel tail is below 1e-12 and the remaining weights are
//! renormalized.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bessel::BesselTable;
use crate::error::Error;
use crate::lattice::{LatticeConfig, ThermoParams};

/// The ring-polymer state: `p` pseudo-particle positions on the infinite
/// lattice. Closure (`sum of steps = 0`) is structural: steps are cyclic
/// position differences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedWalk {
    positions: Vec<i64>,
}

impl ClosedWalk {
    pub fn new(positions: Vec<i64>) -> Self {
        assert!(positions.len() >= 2, "a closed walk needs p >= 2 slices");
        Self { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, alpha: usize) -> i64 {
        self.positions[alpha]
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    /// Step `s_alpha = j_{alpha+1} - j_alpha` with the cyclic wrap
    /// `j_{p+1} = j_1`.
    pub fn step(&self, alpha: usize) -> i64 {
        let p = self.len();
        self.positions[(alpha + 1) % p] - self.positions[alpha]
    }

    pub fn steps(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len()).map(move |a| self.step(a))
    }

    pub fn max_abs_step(&self) -> i64 {
        self.steps().map(i64::abs).max().unwrap_or(0)
    }
}

/// Sequential sampler for the conditional step law of the closed free walk.
///
/// Holds one Bessel table per remaining-step count (argument `k z`); tables
/// are built lazily and regrown when a walk wanders past their order range.
#[derive(Debug)]
pub struct StepSampler {
    z: f64,
    p: usize,
    s_max: i64,
    tables: Vec<Option<BesselTable>>,
}

impl StepSampler {
    /// Tail mass dropped by the step cutoff.
    pub const TAIL_TOL: f64 = 1e-12;

    pub fn new(params: &ThermoParams) -> Result<Self, Error> {
        Self::with_cutoff(params, None)
    }

    /// `cutoff` overrides the tail rule; enumeration oracles pin it to
    /// small values so their state space stays finite.
    pub fn with_cutoff(params: &ThermoParams, cutoff: Option<i64>) -> Result<Self, Error> {
        let z = params.step_arg();
        let s_max = match cutoff {
            Some(s) => {
                if s < 1 {
                    return Err(Error::config("step cutoff must be >= 1"));
                }
                s
            }
            None => {
                let probe = BesselTable::build(z, (z.ceil() as usize).max(8) + 64)?;
                probe.tail_cutoff(Self::TAIL_TOL).max(1) as i64
            }
        };
        Ok(Self {
            z,
            p: params.p,
            s_max,
            tables: (0..=params.p).map(|_| None).collect(),
        })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn s_max(&self) -> i64 {
        self.s_max
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn table(&mut self, k: usize, min_order: usize) -> Result<&BesselTable, Error> {
        let slot = &mut self.tables[k];
        let needs_build = match slot {
            Some(t) => t.max_order() < min_order,
            None => true,
        };
        if needs_build {
            // headroom so a wandering walk rarely forces a rebuild
            let order = min_order + 2 * self.s_max as usize + 16;
            *slot = Some(BesselTable::build(k as f64 * self.z, order)?);
        }
        Ok(slot.as_ref().unwrap())
    }

    /// Conditional probabilities for the next step given `r` remaining steps
    /// and residual displacement `d` (distance still to cancel), listed in
    /// the enumeration order 0, +1, -1, +2, -2, ... used to partition the
    /// unit interval.
    pub fn conditional(&mut self, r: usize, d: i64) -> Result<Vec<(i64, f64)>, Error> {
        if r < 1 {
            return Err(Error::domain("remaining step count must be >= 1"));
        }
        if r == 1 {
            // the unique closing step
            return Ok(vec![(-d, 1.0)]);
        }
        let s_max = self.s_max;
        let reach = (r as i64 - 1) * s_max;
        let max_order = (d.unsigned_abs() as usize + s_max as usize).max(2);
        let single = self.table(1, s_max as usize + 2)?.clone();
        let rest = self.table(r - 1, max_order)?;
        let mut probs = Vec::with_capacity(2 * s_max as usize + 1);
        let mut total = 0.0;
        for s in enumeration_order(s_max) {
            // keep only steps from which the walk can still close
            let w = if (d + s).abs() <= reach {
                single.scaled(s)? * rest.scaled(d + s)?
            } else {
                0.0
            };
            total += w;
            probs.push((s, w));
        }
        if total <= 0.0 {
            return Err(Error::domain(format!(
                "no admissible step from residual {d} with {r} steps left"
            )));
        }
        for (_, w) in probs.iter_mut() {
            *w /= total;
        }
        Ok(probs)
    }

    /// Draws the next step by partitioning the unit interval with the
    /// conditional probabilities.
    pub fn sample_step(&mut self, r: usize, d: i64, rng: &mut ChaCha8Rng) -> Result<i64, Error> {
        if r == 1 {
            return Ok(-d);
        }
        let probs = self.conditional(r, d)?;
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_admissible = None;
        for &(s, w) in &probs {
            if w > 0.0 {
                acc += w;
                last_admissible = Some(s);
                if draw < acc {
                    return Ok(s);
                }
            }
        }
        // rounding can leave the cumulative sum a hair under the draw
        Ok(last_admissible.expect("conditional has positive mass"))
    }

    /// A fresh closed walk of `p` steps started at `start_site`.
    pub fn sample_closed_walk(
        &mut self,
        start_site: i64,
        rng: &mut ChaCha8Rng,
    ) -> Result<ClosedWalk, Error> {
        let steps = self.sample_bridge(self.p, 0, rng)?;
        let mut positions = Vec::with_capacity(self.p);
        let mut pos = start_site;
        for &s in &steps {
            positions.push(pos);
            pos += s;
        }
        debug_assert_eq!(pos, start_site);
        Ok(ClosedWalk::new(positions))
    }

    /// `len` steps with total displacement pinned to `target`: the exact
    /// conditional law of the free measure given the segment endpoints.
    pub fn sample_bridge(
        &mut self,
        len: usize,
        target: i64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<i64>, Error> {
        let mut steps = Vec::with_capacity(len);
        let mut residual = -target;
        for drawn in 0..len {
            let s = self.sample_step(len - drawn, residual, rng)?;
            residual += s;
            steps.push(s);
        }
        debug_assert_eq!(residual, 0);
        Ok(steps)
    }
}

/// 0, +1, -1, +2, -2, ...
fn enumeration_order(s_max: i64) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=s_max).flat_map(|s| [s, -s]))
}

/// Redraws `len` consecutive steps starting at step index `start`, holding
/// the positions just before and after the segment fixed. With `len = p`
/// this is a full refresh anchored at `position(start)`.
pub fn resample_segment(
    walk: &ClosedWalk,
    start: usize,
    len: usize,
    sampler: &mut StepSampler,
    rng: &mut ChaCha8Rng,
) -> Result<ClosedWalk, Error> {
    let p = walk.len();
    if len < 1 || len > p {
        return Err(Error::range(len as i64, p));
    }
    let displacement: i64 = (0..len).map(|k| walk.step((start + k) % p)).sum();
    let steps = sampler.sample_bridge(len, displacement, rng)?;
    let mut positions = walk.positions().to_vec();
    let mut pos = walk.position(start % p);
    for (k, &s) in steps.iter().enumerate().take(len - 1) {
        pos += s;
        positions[(start + k + 1) % p] = pos;
    }
    Ok(ClosedWalk::new(positions))
}

/// Current walk plus the cached potential sum Metropolis updates need.
#[derive(Debug)]
pub struct MetropolisState {
    pub walk: ClosedWalk,
    potential_sum: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl MetropolisState {
    pub fn new(walk: ClosedWalk, config: &LatticeConfig) -> Self {
        let potential_sum = potential_sum(&walk, config);
        Self {
            walk,
            potential_sum,
            accepted: 0,
            proposed: 0,
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

fn potential_sum(walk: &ClosedWalk, config: &LatticeConfig) -> f64 {
    walk.positions().iter().map(|&j| config.potential_at(j)).sum()
}

/// One Metropolis update: propose a bridge resample of a random segment of
/// `round(segment_fraction * p)` steps, accept with
/// `q = exp(-(beta/p) (sum V' - sum V))`. On rejection the previous walk is
/// kept for the next iteration.
pub fn metropolis_step(
    state: &mut MetropolisState,
    config: &LatticeConfig,
    params: &ThermoParams,
    sampler: &mut StepSampler,
    segment_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<bool, Error> {
    if !(segment_fraction > 0.0 && segment_fraction <= 1.0) {
        return Err(Error::config("segment_fraction must lie in (0, 1]"));
    }
    let p = state.walk.len();
    let len = ((segment_fraction * p as f64).round() as usize).clamp(1, p);
    let start = rng.gen_range(0..p);
    let proposal = resample_segment(&state.walk, start, len, sampler, rng)?;
    accept_or_reject(state, config, params, proposal, rng)
}

/// Rigid translation of the whole walk by ±1 site, accepted with the same
/// Gibbs factor. The free step measure is translation invariant, so this
/// satisfies detailed balance trivially; it is the move that keeps the
/// chain ergodic across the sublattices when `2 beta t / p` is so small
/// that segment proposals almost never relocate the walk.
pub fn translation_step(
    state: &mut MetropolisState,
    config: &LatticeConfig,
    params: &ThermoParams,
    rng: &mut ChaCha8Rng,
) -> Result<bool, Error> {
    let shift = if rng.gen::<bool>() { 1 } else { -1 };
    let proposal = ClosedWalk::new(state.walk.positions().iter().map(|&j| j + shift).collect());
    accept_or_reject(state, config, params, proposal, rng)
}

fn accept_or_reject(
    state: &mut MetropolisState,
    config: &LatticeConfig,
    params: &ThermoParams,
    proposal: ClosedWalk,
    rng: &mut ChaCha8Rng,
) -> Result<bool, Error> {
    let p = state.walk.len();
    let new_sum = potential_sum(&proposal, config);
    let q = (-(params.beta / p as f64) * (new_sum - state.potential_sum)).exp();
    let accept = q >= 1.0 || rng.gen::<f64>() < q;
    state.proposed += 1;
    if accept {
        state.accepted += 1;
        state.walk = proposal;
        state.potential_sum = new_sum;
    }
    debug_assert!(
        (state.potential_sum - potential_sum(&state.walk, config)).abs() < 1e-9,
        "cached potential sum drifted"
    );
    Ok(accept)
}

/// Burn-in, thinning, and proposal size for a Metropolis chain.
#[derive(Debug, Clone, Copy)]
pub struct ChainSchedule {
    pub burn_in: usize,
    pub n_samples: usize,
    pub thin: usize,
    pub segment_fraction: f64,
}

impl ChainSchedule {
    /// Burn-in defaults to `10 p` Metropolis steps.
    pub fn standard(n_samples: usize, p: usize) -> Self {
        Self {
            burn_in: 10 * p,
            n_samples,
            thin: 1,
            segment_fraction: 0.2,
        }
    }
}

/// Fraction of chain updates that are rigid translations instead of
/// segment resamples.
const TRANSLATION_RATE: f64 = 0.25;

/// A single Markov chain emitting every `thin`-th walk after burn-in.
/// Updates mix segment resamples with rigid translations.
///
/// On a potential-free lattice every proposal is accepted and the free
/// measure is sampled exactly, so the chain short-circuits to independent
/// fresh walks at uniformly random start sites (the stationary law itself).
pub struct ChainSampler<'a> {
    config: &'a LatticeConfig,
    params: ThermoParams,
    schedule: ChainSchedule,
    sampler: StepSampler,
    state: MetropolisState,
    rng: ChaCha8Rng,
    emitted: usize,
    free_lattice: bool,
}

impl<'a> ChainSampler<'a> {
    pub fn new(
        config: &'a LatticeConfig,
        params: ThermoParams,
        schedule: ChainSchedule,
        rng: ChaCha8Rng,
    ) -> Result<Self, Error> {
        let mut rng = rng;
        let mut sampler = StepSampler::new(&params)?;
        let start = rng.gen_range(0..config.len()) as i64;
        let walk = sampler.sample_closed_walk(start, &mut rng)?;
        let state = MetropolisState::new(walk, config);
        let free_lattice = config.is_potential_free();
        let mut chain = Self {
            config,
            params,
            schedule,
            sampler,
            state,
            rng,
            emitted: 0,
            free_lattice,
        };
        if !chain.free_lattice {
            for _ in 0..chain.schedule.burn_in {
                chain.advance()?;
            }
        }
        Ok(chain)
    }

    pub fn with_seed(
        config: &'a LatticeConfig,
        params: ThermoParams,
        schedule: ChainSchedule,
        seed: u64,
    ) -> Result<Self, Error> {
        use rand::SeedableRng;
        Self::new(config, params, schedule, ChaCha8Rng::seed_from_u64(seed))
    }

    fn advance(&mut self) -> Result<bool, Error> {
        if self.rng.gen::<f64>() < TRANSLATION_RATE {
            translation_step(&mut self.state, self.config, &self.params, &mut self.rng)
        } else {
            metropolis_step(
                &mut self.state,
                self.config,
                &self.params,
                &mut self.sampler,
                self.schedule.segment_fraction,
                &mut self.rng,
            )
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.state.acceptance_rate()
    }

    /// Next emitted walk, or `None` once `n_samples` have been produced.
    pub fn next_walk(&mut self) -> Result<Option<ClosedWalk>, Error> {
        if self.emitted >= self.schedule.n_samples {
            return Ok(None);
        }
        self.emitted += 1;
        if self.free_lattice {
            // exact i.i.d. sampling from the stationary free measure
            let start = self.rng.gen_range(0..self.config.len()) as i64;
            let walk = self.sampler.sample_closed_walk(start, &mut self.rng)?;
            self.state.proposed += 1;
            self.state.accepted += 1;
            self.state.walk = walk.clone();
            return Ok(Some(walk));
        }
        for _ in 0..self.schedule.thin.max(1) {
            self.advance()?;
        }
        Ok(Some(self.state.walk.clone()))
    }
}
