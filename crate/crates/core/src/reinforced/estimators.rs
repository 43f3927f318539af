//! Estimators and tightness diagnostics read off a reinforced trace.

use super::occupation::{OccupationMeasure, Points, StateStore};
use super::run::ReinforcedTrace;
use crate::benchmarks::{ks_distance, ReferenceQSD};
use crate::diffusion::Domain;
use crate::error::{Error, Result};

/// `n / θ_n`, the estimate of the absorption rate λ₀.
pub fn lambda0_estimate<S: StateStore>(trace: &ReinforcedTrace<S>) -> Option<f64> {
    let theta = *trace.theta.last()?;
    Some(trace.theta.len() as f64 / theta)
}

/// `(n, θ_n / n)` for every cycle.
pub fn theta_ratio_series<S: StateStore>(trace: &ReinforcedTrace<S>) -> Vec<(usize, f64)> {
    trace
        .theta
        .iter()
        .enumerate()
        .map(|(i, &theta)| (i + 1, theta / (i + 1) as f64))
        .collect()
}

/// Discrete probability measure with distinct atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    coords: Vec<f64>,
    masses: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Merges equal points; masses are normalized to sum to one.
    pub fn from_weighted<'a, I>(dim: usize, atoms: I) -> Self
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
    {
        let mut atoms: Vec<(&[f64], f64)> = atoms.into_iter().collect();
        atoms.sort_by(|a, b| {
            a.0.iter()
                .zip(b.0)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let mut coords: Vec<f64> = Vec::new();
        let mut masses: Vec<f64> = Vec::new();
        for (point, mass) in atoms {
            let same = masses.last().is_some() && &coords[coords.len() - dim..] == point;
            if same {
                *masses.last_mut().unwrap() += mass / total;
            } else {
                coords.extend_from_slice(point);
                masses.push(mass / total);
            }
        }
        Self {
            dim,
            coords,
            masses,
        }
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.masses.iter().copied())
    }
}

/// `η_n = (1/n) Σ δ_{Z_i}` over the resample points.
pub fn eta_n_measure(trace: &ReinforcedTrace<Points>) -> Result<EmpiricalMeasure> {
    if trace.resample_points.is_empty() {
        return Err(Error::Precondition("trace has no resample points".into()));
    }
    Ok(EmpiricalMeasure::from_weighted(
        trace.resample_points.dim(),
        trace.resample_points.iter().map(|z| (z, 1.0)),
    ))
}

/// Occupation-time fraction spent within `eta` of the boundary.
pub fn boundary_layer_mass<D: Domain + ?Sized>(
    occupation: &OccupationMeasure<Points>,
    domain: &D,
    eta: f64,
) -> Result<f64> {
    occupation.occupation_average(|x| {
        if domain.boundary_distance(x) < eta {
            1.0
        } else {
            0.0
        }
    })
}

/// KS distance between the occupation measure restricted to times after
/// `from_time` and the reference, along the reference's coordinate.
pub fn occupation_ks(
    occupation: &OccupationMeasure<Points>,
    reference: &ReferenceQSD,
    from_time: f64,
) -> Result<f64> {
    let first = occupation.index_after(from_time);
    let samples = occupation
        .iter()
        .skip(first)
        .map(|(x, w)| (reference.coordinate(x), w));
    ks_distance(samples, |y| reference.cdf(y))
}

/// KS distance of `η_n` (resample points from cycle `from_cycle` on) to the reference.
pub fn resample_ks(
    trace: &ReinforcedTrace<Points>,
    reference: &ReferenceQSD,
    from_cycle: usize,
) -> Result<f64> {
    let samples = trace
        .resample_points
        .iter()
        .skip(from_cycle)
        .map(|z| (reference.coordinate(z), 1.0));
    ks_distance(samples, |y| reference.cdf(y))
}

/// KS distance between the occupation measure (after `from_time`) and
/// `η_n` (from cycle `from_cycle` on), both projected by the reference.
pub fn occupation_vs_resample_ks(
    trace: &ReinforcedTrace<Points>,
    reference: &ReferenceQSD,
    from_time: f64,
    from_cycle: usize,
) -> Result<f64> {
    let mut zs: Vec<f64> = trace
        .resample_points
        .iter()
        .skip(from_cycle)
        .map(|z| reference.coordinate(z))
        .collect();
    if zs.is_empty() {
        return Err(Error::Precondition(
            "no resample points after burn-in".into(),
        ));
    }
    zs.sort_by(f64::total_cmp);
    let n = zs.len() as f64;
    let cdf = |y: f64| zs.partition_point(|&z| z <= y) as f64 / n;
    let first = trace.occupation.index_after(from_time);
    let samples = trace
        .occupation
        .iter()
        .skip(first)
        .map(|(x, w)| (reference.coordinate(x), w));
    ks_distance(samples, cdf)
}

/// Slope of `ln P̂(L > t)` over the range where the empirical survival
/// of `lengths` falls from `upper` to `lower`.
pub fn survival_log_slope(lengths: &[f64], upper: f64, lower: f64) -> Option<f64> {
    if lengths.len() < 10 || !(0.0 < lower && lower < upper && upper <= 1.0) {
        return None;
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let quantile = |survival: f64| sorted[(((1.0 - survival) * n) as usize).min(sorted.len() - 1)];
    let (t0, t1) = (quantile(upper), quantile(lower));
    if !(t1 > t0) {
        return None;
    }
    let points: Vec<(f64, f64)> = (0..=20)
        .map(|k| {
            let t = t0 + (t1 - t0) * k as f64 / 20.0;
            let above = sorted.len() - sorted.partition_point(|&l| l <= t);
            (t, above as f64 / n)
        })
        .filter(|p| p.1 > 0.0)
        .collect();
    crate::green_lab::fit_log_slope(&points)
}

/// Cycle lengths `θ_k − θ_{k−1}` from cycle `from_cycle` on.
pub fn cycle_lengths<S: StateStore>(trace: &ReinforcedTrace<S>, from_cycle: usize) -> Vec<f64> {
    let mut previous = 0.0;
    let mut lengths = Vec::with_capacity(trace.theta.len());
    for &theta in &trace.theta {
        lengths.push(theta - previous);
        previous = theta;
    }
    lengths.split_off(from_cycle.min(lengths.len()))
}
