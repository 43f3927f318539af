//! Asymptotic pseudo-trajectory check for the resampling measures `η_n`.
//!
//! `η_n` is placed on the clock `τ_1 = 0`, `τ_n = γ_2 + … + γ_n` with
//! `γ_{n+1} = 1 / ((n+1) η_n A1)` and interpolated linearly; over each
//! window `[t, t+T]` it is compared with the flow started from `η̃_t`.

use nalgebra::{DMatrix, DVector};

use super::simulate::eta_vector;
use super::{green, AbsorbingChain};
use crate::error::{param, Error, Result};
use crate::green_lab::powers::shifted_green_propagator;
use crate::linalg::{normalized, tv_distance};
use crate::reinforced::ReinforcedTrace;

/// Sample points per window used to approximate the supremum over `s ∈ [0, T]`.
pub const WINDOW_SAMPLES: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct AptReport {
    pub window: f64,
    pub window_starts: Vec<f64>,
    /// `sup_{s ≤ T} TV(η̃_{t+s}, flow_s(η̃_t))` for each window start `t`.
    pub sup_distances: Vec<f64>,
    /// Final time `τ_N` of the interpolated sequence.
    pub clock_end: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

impl AptReport {
    /// Median over the last quarter of windows is below that of the first quarter.
    pub fn is_decreasing(&self) -> bool {
        let q = (self.sup_distances.len() / 4).max(1);
        let n = self.sup_distances.len();
        n >= 2 && median(&self.sup_distances[n - q..]) < median(&self.sup_distances[..q])
    }

    pub fn last(&self) -> Option<f64> {
        self.sup_distances.last().copied()
    }
}

/// The `τ_n` clock for a sequence `η_1, η_2, …`.
pub fn apt_clock(etas: &[DVector<f64>], mean_absorption: &DVector<f64>) -> Vec<f64> {
    let mut tau = Vec::with_capacity(etas.len());
    let mut t = 0.0;
    tau.push(t);
    for (i, eta) in etas.iter().enumerate().take(etas.len().saturating_sub(1)) {
        let n = (i + 1) as f64;
        t += 1.0 / ((n + 1.0) * eta.dot(mean_absorption));
        tau.push(t);
    }
    tau
}

/// `η_1, …, η_N` from the resample points of a finite-chain trace.
pub fn eta_sequence(trace: &ReinforcedTrace<Vec<usize>>, n_states: usize) -> Vec<DVector<f64>> {
    let mut counts = DVector::zeros(n_states);
    trace
        .resample_points
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            counts[z] += 1.0;
            &counts / (i + 1) as f64
        })
        .collect()
}

fn interpolate(etas: &[DVector<f64>], tau: &[f64], t: f64) -> DVector<f64> {
    let i = tau
        .partition_point(|&x| x <= t)
        .saturating_sub(1)
        .min(tau.len() - 1);
    if i + 1 >= tau.len() {
        return etas[i].clone();
    }
    let frac = (t - tau[i]) / (tau[i + 1] - tau[i]);
    &etas[i] + (&etas[i + 1] - &etas[i]) * frac
}

/// Window starts `0, Δ, 2Δ, …` with the last window ending at `clock_end`.
pub fn window_starts(clock_end: f64, window: f64, count: usize) -> Vec<f64> {
    let span = (clock_end - window).max(0.0);
    if count <= 1 {
        return vec![0.0];
    }
    (0..count)
        .map(|k| span * k as f64 / (count - 1) as f64)
        .collect()
}

/// APT distances for an arbitrary sequence of measures on the chain's states.
pub fn apt_check_sequence(
    etas: &[DVector<f64>],
    chain: &AbsorbingChain,
    window: f64,
    t_grid: &[f64],
) -> Result<AptReport> {
    if etas.len() < 2 {
        return Err(param("etas", "need at least two measures"));
    }
    if !(window > 0.0) || !window.is_finite() {
        return Err(param("window", "must be positive and finite"));
    }
    let a = green(chain)?;
    let h = &a * DVector::from_element(chain.n_states(), 1.0);
    let tau = apt_clock(etas, &h);
    let clock_end = *tau.last().expect("non-empty");
    let propagator = shifted_green_propagator(&a)?;
    let offsets: Vec<f64> = (0..WINDOW_SAMPLES)
        .map(|k| window * k as f64 / (WINDOW_SAMPLES - 1) as f64)
        .collect();
    let flows: Vec<DMatrix<f64>> = offsets.iter().map(|&s| propagator.exp(s)).collect();
    let mut sup_distances = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t < 0.0 || t + window > clock_end * (1.0 + 1e-12) {
            return Err(Error::Horizon { t: t + window });
        }
        let start = interpolate(etas, &tau, t);
        let sup = offsets
            .iter()
            .zip(&flows)
            .map(|(&s, e)| {
                let shadow = normalized(&e.tr_mul(&start));
                tv_distance(&interpolate(etas, &tau, (t + s).min(clock_end)), &shadow)
            })
            .fold(0.0, f64::max);
        sup_distances.push(sup);
    }
    Ok(AptReport {
        window,
        window_starts: t_grid.to_vec(),
        sup_distances,
        clock_end,
    })
}

/// APT distances for a reinforced finite-chain trace.
pub fn apt_check(
    trace: &ReinforcedTrace<Vec<usize>>,
    chain: &AbsorbingChain,
    window: f64,
    t_grid: &[f64],
) -> Result<AptReport> {
    let etas = eta_sequence(trace, chain.n_states());
    debug_assert_eq!(
        etas.last().cloned(),
        Some(eta_vector(trace, chain.n_states()))
    );
    apt_check_sequence(&etas, chain, window, t_grid)
}
