//! Absorbed diffusions: models, domains, killed Euler–Maruyama paths and
//! Monte Carlo Green-operator estimates.

mod domain;
mod green_mc;
mod model;
mod registry;
mod simulate;

pub use domain::{Ball, BoundingBox, BoxDomain, Domain};
pub use green_mc::{estimate_green_mc, GreenEstimate};
pub use model::{BrownianMotion, ConstantDrift, DiffusionModel, PolynomialModel};
pub use registry::{ModelSpec, MODEL_NAMES};
pub use simulate::{
    detect_absorption, euler_step, simulate_until_absorption, visit_path, AbsorbedPath, Crossing,
    PathSummary, SimOptions,
};
