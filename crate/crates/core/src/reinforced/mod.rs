//! Self-interacting absorbed process: occupation measures, the reinforced
//! run, and its estimators.

mod estimators;
mod occupation;
mod run;

pub use estimators::{
    boundary_layer_mass, cycle_lengths, eta_n_measure, lambda0_estimate, occupation_ks,
    occupation_vs_resample_ks, resample_ks, survival_log_slope, theta_ratio_series,
    EmpiricalMeasure,
};
pub use occupation::{OccupationMeasure, Points, StateStore};
pub use run::{run_reinforced, DiagnosticsConfig, ReinforcedTrace, Snapshot, SnapshotSchedule};
