//! Exact simulation of the finite chain and its reinforced version.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::AbsorbingChain;
use crate::error::{param, Error, Result};
use crate::reinforced::{OccupationMeasure, ReinforcedTrace, SnapshotSchedule};

/// Holding-time and jump samplers for every state; target `n` is `∂`.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    exit_rates: Vec<f64>,
    jumps: Vec<WeightedIndex<f64>>,
}

impl ChainSampler {
    pub fn new(chain: &AbsorbingChain) -> Result<Self> {
        let n = chain.n_states();
        let mut exit_rates = Vec::with_capacity(n);
        let mut jumps = Vec::with_capacity(n);
        for i in 0..n {
            let rate = chain.exit_rate(i);
            if !(rate > 0.0) {
                return Err(Error::NoAbsorption);
            }
            let weights = (0..=n).map(|j| match j {
                j if j == n => chain.absorb_rate()[i],
                j if j == i => 0.0,
                j => chain.q()[(i, j)],
            });
            jumps
                .push(WeightedIndex::new(weights).map_err(|e| Error::InvalidChain(e.to_string()))?);
            exit_rates.push(rate);
        }
        Ok(Self { exit_rates, jumps })
    }

    pub fn n_states(&self) -> usize {
        self.exit_rates.len()
    }

    /// Runs one path from `start` until absorption, passing each visited
    /// state and its holding time to `visit`. Returns the absorption time.
    pub fn visit_path<R, V>(&self, start: usize, rng: &mut R, mut visit: V) -> f64
    where
        R: Rng + ?Sized,
        V: FnMut(usize, f64),
    {
        let n = self.n_states();
        let mut state = start;
        let mut elapsed = 0.0;
        loop {
            let mut hold: f64 = Exp1.sample(rng);
            hold /= self.exit_rates[state];
            if hold <= 0.0 {
                hold = f64::MIN_POSITIVE;
            }
            visit(state, hold);
            elapsed += hold;
            let next = self.jumps[state].sample(rng);
            if next == n {
                return elapsed;
            }
            state = next;
        }
    }
}

/// Absorption time of one exact path from `start`.
pub fn chain_absorption_time<R: Rng + ?Sized>(
    chain: &AbsorbingChain,
    start: usize,
    rng: &mut R,
) -> Result<f64> {
    if start >= chain.n_states() {
        return Err(param("start", "state index out of range"));
    }
    Ok(ChainSampler::new(chain)?.visit_path(start, rng, |_, _| {}))
}

/// Reinforced chain: each cycle runs the chain exactly from the current
/// start until absorption, adds the exact holding times to the shared
/// occupation measure, records θ_k and restarts from a draw of it.
pub fn reinforced_chain<R: Rng + ?Sized>(
    chain: &AbsorbingChain,
    start: usize,
    n_cycles: usize,
    rng: &mut R,
) -> Result<ReinforcedTrace<Vec<usize>>> {
    if n_cycles == 0 {
        return Err(param("n_cycles", "must be at least 1"));
    }
    if start >= chain.n_states() {
        return Err(param("start", "state index out of range"));
    }
    let sampler = ChainSampler::new(chain)?;
    let mut trace = ReinforcedTrace::new(Vec::new(), OccupationMeasure::new(Vec::new()));
    let mut schedule = SnapshotSchedule::new(2);
    let mut current = start;
    for cycle in 1..=n_cycles {
        let occupation = &mut trace.occupation;
        sampler.visit_path(current, rng, |state, hold| occupation.push(&state, hold));
        current = *trace.close_cycle(rng)?;
        if schedule.due(cycle, n_cycles) {
            trace.snapshot(None, None);
        }
    }
    Ok(trace)
}

/// `η_n` over the states: the fraction of resample points equal to each.
pub fn eta_vector(trace: &ReinforcedTrace<Vec<usize>>, n_states: usize) -> nalgebra::DVector<f64> {
    let mut counts = nalgebra::DVector::zeros(n_states);
    for &z in trace.resample_points.iter() {
        counts[z] += 1.0;
    }
    let n = trace.resample_points.len().max(1) as f64;
    counts / n
}
