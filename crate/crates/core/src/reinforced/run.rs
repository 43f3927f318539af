//! The reinforced absorbed diffusion: run, absorb, restart from the
//! occupation measure of the whole past.

use rand::Rng;

use super::occupation::{OccupationMeasure, Points, StateStore};
use crate::benchmarks::ReferenceQSD;
use crate::diffusion::{visit_path, DiffusionModel, Domain, SimOptions};
use crate::error::{param, Error, Result};

/// Summary statistics recorded at geometrically spaced cycle counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub cycle: usize,
    pub theta: f64,
    pub theta_ratio: f64,
    pub lambda0_estimate: f64,
    pub ks_to_reference: Option<f64>,
    pub boundary_layer_mass: Option<f64>,
}

/// Cycles 1, b, b², … and the final cycle.
#[derive(Debug, Clone)]
pub struct SnapshotSchedule {
    base: usize,
    next: usize,
}

impl SnapshotSchedule {
    pub fn new(base: usize) -> Self {
        Self {
            base: base.max(2),
            next: 1,
        }
    }

    pub fn due(&mut self, cycle: usize, last: usize) -> bool {
        let hit = cycle == self.next;
        while self.next <= cycle {
            self.next *= self.base;
        }
        hit || cycle == last
    }
}

/// Absorption times `θ_k`, resample points `Z_k = Y_{θ_k}` and the final
/// occupation measure of a reinforced run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReinforcedTrace<S: StateStore = Points> {
    pub theta: Vec<f64>,
    pub resample_points: S,
    pub occupation: OccupationMeasure<S>,
    pub snapshots: Vec<Snapshot>,
}

impl<S: StateStore> ReinforcedTrace<S> {
    pub fn new(resample_points: S, occupation: OccupationMeasure<S>) -> Self {
        assert!(resample_points.is_empty() && occupation.is_empty());
        Self {
            theta: Vec::new(),
            resample_points,
            occupation,
            snapshots: Vec::new(),
        }
    }

    pub fn n_cycles(&self) -> usize {
        self.theta.len()
    }

    /// Ends a cycle at the current occupation time and draws the next start.
    pub fn close_cycle<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<&S::State> {
        let theta = self.occupation.total_time();
        if self.theta.last().is_some_and(|&prev| theta <= prev) {
            return Err(Error::Precondition("cycle added no occupation time".into()));
        }
        self.theta.push(theta);
        let z = self.occupation.resample(rng)?;
        self.resample_points.push(z);
        Ok(self.resample_points.get(self.resample_points.len() - 1))
    }

    /// Records a snapshot of the current cycle count.
    pub fn snapshot(&mut self, ks_to_reference: Option<f64>, boundary_layer_mass: Option<f64>) {
        let n = self.theta.len();
        let theta = *self
            .theta
            .last()
            .expect("snapshot after at least one cycle");
        self.snapshots.push(Snapshot {
            cycle: n,
            theta,
            theta_ratio: theta / n as f64,
            lambda0_estimate: n as f64 / theta,
            ks_to_reference,
            boundary_layer_mass,
        });
    }
}

/// Diagnostics and storage options for [`run_reinforced`].
#[derive(Debug, Clone)]
pub struct DiagnosticsConfig {
    /// Boundary-layer width for the tightness diagnostic; `None` disables it.
    pub eta_boundary: Option<f64>,
    /// Snapshots at cycles 1, b, b², ….
    pub snapshot_base: usize,
    /// Keep every m-th step with the time of the skipped ones folded in.
    pub thinning: usize,
    /// Reference QSD for the KS column of the snapshots.
    pub reference: Option<ReferenceQSD>,
    pub sim: SimOptions,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            eta_boundary: Some(0.05),
            snapshot_base: 2,
            thinning: 1,
            reference: None,
            sim: SimOptions::default(),
        }
    }
}

/// Runs `n_cycles` cycles of the reinforced process from `x0`.
///
/// Cycle k simulates from its start until absorption, appends the visited
/// states (weight dt, last one `hit_fraction·dt`) to the shared occupation
/// measure, records θ_k and draws Z_k from the measure; Z_k starts cycle k+1.
#[allow(clippy::too_many_arguments)]
pub fn run_reinforced<M, D, R>(
    model: &M,
    domain: &D,
    x0: &[f64],
    dt: f64,
    n_cycles: usize,
    rng: &mut R,
    diagnostics: &DiagnosticsConfig,
) -> Result<ReinforcedTrace>
where
    M: DiffusionModel + ?Sized,
    D: Domain + ?Sized,
    R: Rng + ?Sized,
{
    if n_cycles == 0 {
        return Err(param("n_cycles", "must be at least 1"));
    }
    if diagnostics.thinning == 0 {
        return Err(param("thinning", "must be at least 1"));
    }
    let dim = model.dim();
    let mut trace =
        ReinforcedTrace::new(Points::new(dim), OccupationMeasure::new(Points::new(dim)));
    let mut schedule = SnapshotSchedule::new(diagnostics.snapshot_base);
    let mut start = x0.to_vec();
    for cycle in 1..=n_cycles {
        let occupation = &mut trace.occupation;
        let mut step = 0usize;
        visit_path(model, domain, &start, dt, rng, &diagnostics.sim, |x, w| {
            if step.is_multiple_of(diagnostics.thinning) {
                occupation.push(x, w);
            } else {
                occupation.add_to_last(w);
            }
            step += 1;
        })?;
        start.copy_from_slice(trace.close_cycle(rng)?);
        if schedule.due(cycle, n_cycles) {
            let ks = diagnostics
                .reference
                .as_ref()
                .map(|r| super::occupation_ks(&trace.occupation, r, 0.0))
                .transpose()?;
            let mass = diagnostics
                .eta_boundary
                .map(|eta| super::boundary_layer_mass(&trace.occupation, domain, eta))
                .transpose()?;
            trace.snapshot(ks, mass);
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{BoxDomain, BrownianMotion};
    use crate::rng::stream;

    #[test]
    fn schedule_is_geometric() {
        let mut s = SnapshotSchedule::new(2);
        let due: Vec<usize> = (1..=20).filter(|&c| s.due(c, 20)).collect();
        assert_eq!(due, vec![1, 2, 4, 8, 16, 20]);
        let mut s = SnapshotSchedule::new(10);
        let due: Vec<usize> = (1..=250).filter(|&c| s.due(c, 250)).collect();
        assert_eq!(due, vec![1, 10, 100, 250]);
    }

    fn short_run(seed: u64, cycles: usize) -> ReinforcedTrace {
        run_reinforced(
            &BrownianMotion::new(1),
            &BoxDomain::unit_interval(),
            &[0.5],
            1e-3,
            cycles,
            &mut stream(seed, 0),
            &DiagnosticsConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn one_cycle_structure() {
        let t = short_run(1, 1);
        assert_eq!(t.theta.len(), 1);
        assert_eq!(t.resample_points.len(), 1);
        let z = t.resample_points.get(0)[0];
        assert!(z > 0.0 && z < 1.0);
    }

    #[test]
    fn occupation_time_equals_last_theta() {
        let t = short_run(2, 50);
        assert_eq!(*t.theta.last().unwrap(), t.occupation.total_time());
        assert!(t.theta.windows(2).all(|w| w[0] < w[1]));
        assert!(t.resample_points.iter().all(|z| z[0] > 0.0 && z[0] < 1.0));
        assert!((t.occupation.occupation_average(|_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        let snap_cycles: Vec<usize> = t.snapshots.iter().map(|s| s.cycle).collect();
        assert_eq!(snap_cycles, vec![1, 2, 4, 8, 16, 32, 50]);
    }

    #[test]
    fn replays_are_bit_identical() {
        assert_eq!(short_run(3, 30), short_run(3, 30));
    }

    #[test]
    fn thinning_preserves_time() {
        let full = short_run(4, 20);
        let thinned = run_reinforced(
            &BrownianMotion::new(1),
            &BoxDomain::unit_interval(),
            &[0.5],
            1e-3,
            20,
            &mut stream(4, 0),
            &DiagnosticsConfig {
                thinning: 7,
                ..DiagnosticsConfig::default()
            },
        )
        .unwrap();
        // Same random stream, so the first cycle is the same path.
        assert!((full.theta[0] - thinned.theta[0]).abs() < 1e-12);
        let first = thinned.occupation.index_after(thinned.theta[0]);
        assert_eq!(
            first,
            full.occupation.index_after(full.theta[0]).div_ceil(7)
        );
        let sum: f64 = thinned.occupation.weights().iter().sum();
        assert!((sum - thinned.occupation.total_time()).abs() <= 1e-12 * sum);
    }

    #[test]
    fn rejects_zero_cycles() {
        let r = run_reinforced(
            &BrownianMotion::new(1),
            &BoxDomain::unit_interval(),
            &[0.5],
            1e-3,
            0,
            &mut stream(0, 0),
            &DiagnosticsConfig::default(),
        );
        assert!(r.is_err());
    }
}
