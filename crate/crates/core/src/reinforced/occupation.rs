//! Time-weighted occupation measures with logarithmic-time sampling.

use rand::Rng;

use crate::error::{Error, Result};

/// Append-only storage for the states of an occupation measure.
pub trait StateStore: Clone + Send + Sync {
    type State: ?Sized;

    fn len(&self) -> usize;
    fn get(&self, i: usize) -> &Self::State;
    fn push(&mut self, state: &Self::State);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Points of `R^dim`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }
}

impl StateStore for Points {
    type State = [f64];

    fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn push(&mut self, state: &[f64]) {
        assert_eq!(state.len(), self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(state);
    }
}

/// States of a finite chain, by index.
impl StateStore for Vec<usize> {
    type State = usize;

    fn len(&self) -> usize {
        <[usize]>::len(self)
    }

    fn get(&self, i: usize) -> &usize {
        &self[i]
    }

    fn push(&mut self, state: &usize) {
        Vec::push(self, *state)
    }
}

/// `Σ_i w_i δ_{x_i}` with prefix sums of the weights; normalized by the
/// total time it is the empirical occupation measure μ_t.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure<S: StateStore = Points> {
    states: S,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<S: StateStore> OccupationMeasure<S> {
    pub fn new(states: S) -> Self {
        assert!(states.is_empty(), "occupation measures start empty");
        Self {
            states,
            weights: Vec::new(),
            cumulative: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn states(&self) -> &S {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn state(&self, i: usize) -> &S::State {
        self.states.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S::State, f64)> + '_ {
        (0..self.len()).map(move |i| (self.states.get(i), self.weights[i]))
    }

    /// Appends `state` with occupation time `weight > 0`.
    pub fn push(&mut self, state: &S::State, weight: f64) {
        debug_assert!(
            weight > 0.0 && weight.is_finite(),
            "weight must be positive, got {weight}"
        );
        self.states.push(state);
        self.weights.push(weight);
        self.cumulative.push(self.total_time() + weight);
    }

    /// Credits extra time to the most recent state (thinned storage).
    pub fn add_to_last(&mut self, weight: f64) {
        debug_assert!(weight > 0.0 && weight.is_finite());
        let last = self.weights.len() - 1;
        self.weights[last] += weight;
        self.cumulative[last] += weight;
    }

    /// Index of the first entry whose occupation interval ends after `time`.
    pub fn index_after(&self, time: f64) -> usize {
        self.cumulative.partition_point(|&c| c <= time)
    }

    /// `Σ f(x_i) w_i`, the unnormalized integral.
    pub fn integrate<F: FnMut(&S::State) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(x, w)| f(x) * w).sum()
    }

    /// `μ_t(f) = Σ f(x_i) w_i / Σ w_i`.
    pub fn occupation_average<F: FnMut(&S::State) -> f64>(&self, f: F) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Precondition("occupation measure is empty".into()));
        }
        Ok(self.integrate(f) / self.total_time())
    }

    /// Draws a state with probability `w_i / total_time` from one uniform
    /// and a binary search over the prefix sums.
    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&S::State> {
        if self.is_empty() {
            return Err(Error::Precondition(
                "cannot resample an empty occupation measure".into(),
            ));
        }
        let u = rng.random::<f64>() * self.total_time();
        let i = self.index_after(u).min(self.len() - 1);
        Ok(self.states.get(i))
    }
}
