//! Exact finite-state laboratory: spectra, Green operator, semigroup,
//! convergence bounds, the normalized flow, the reinforced chain and the
//! pseudo-trajectory check.

mod apt;
mod chain;
mod conditions;
mod flow;
mod powers;
mod semigroup;
mod simulate;
mod spectral;

pub use apt::{
    apt_check, apt_check_sequence, apt_clock, eta_sequence, window_starts, AptReport,
    WINDOW_SAMPLES,
};
pub use chain::AbsorbingChain;
pub use conditions::{check_a1_a2, A1A2Report};
pub use flow::{flow_field, flow_ode, FlowState, FlowTrajectory};
pub use powers::{
    default_flow_grid, fit_log_slope, green_power, verify_exp_flow_bound, verify_powers_bound,
    DecayReport, GreenPower, PowersReport, DISTANCE_FLOOR, GREEN_POWER_TOL, RATE_SLACK,
};
pub use semigroup::{conditional_law, semigroup, SURVIVAL_FLOOR};
pub use simulate::{chain_absorption_time, eta_vector, reinforced_chain, ChainSampler};
pub use spectral::{green, mean_absorption_times, spectral, SpectralData};
