//! Built-in models, looked up by name.

use super::{
    Ball, BoxDomain, BrownianMotion, ConstantDrift, DiffusionModel, Domain, PolynomialModel,
};
use crate::error::{param, Result};

/// Names accepted by [`ModelSpec::from_name`].
pub const MODEL_NAMES: [&str; 4] = [
    "bm-interval",
    "bm-disk",
    "drifted-interval",
    "custom-polynomial",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// b ≡ 0, σ ≡ 1 on (0, 1).
    BmInterval,
    /// b ≡ 0, σ ≡ I on the unit disk.
    BmDisk,
    /// b ≡ c, σ ≡ 1 on (0, 1).
    DriftedInterval { drift: f64 },
    /// Separable polynomial coefficients; see [`PolynomialModel`].
    CustomPolynomial {
        drift: Vec<Vec<f64>>,
        diffusion: Vec<Vec<f64>>,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::BmInterval => "bm-interval",
            ModelSpec::BmDisk => "bm-disk",
            ModelSpec::DriftedInterval { .. } => "drifted-interval",
            ModelSpec::CustomPolynomial { .. } => "custom-polynomial",
        }
    }

    /// Parameter-free lookup; `drifted-interval` takes its drift from `drift`.
    pub fn from_name(name: &str, drift: Option<f64>) -> Result<Self> {
        match name {
            "bm-interval" => Ok(ModelSpec::BmInterval),
            "bm-disk" => Ok(ModelSpec::BmDisk),
            "drifted-interval" => drift
                .map(|drift| ModelSpec::DriftedInterval { drift })
                .ok_or_else(|| param("drift", "drifted-interval requires a drift value")),
            "custom-polynomial" => {
                Err(param("model", "custom-polynomial needs coefficient arrays"))
            }
            other => Err(param("model", format!("unknown model `{other}`"))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::BmDisk => 2,
            ModelSpec::CustomPolynomial { drift, .. } => drift.len(),
            _ => 1,
        }
    }

    pub fn build_model(&self) -> Result<Box<dyn DiffusionModel>> {
        Ok(match self {
            ModelSpec::BmInterval => Box::new(BrownianMotion::new(1)),
            ModelSpec::BmDisk => Box::new(BrownianMotion::new(2)),
            ModelSpec::DriftedInterval { drift } => Box::new(ConstantDrift::new(vec![*drift], 1.0)),
            ModelSpec::CustomPolynomial { drift, diffusion } => {
                Box::new(PolynomialModel::new(drift.clone(), diffusion.clone())?)
            }
        })
    }

    /// Domain that comes with the model, if any.
    pub fn default_domain(&self) -> Option<Box<dyn Domain>> {
        match self {
            ModelSpec::BmInterval | ModelSpec::DriftedInterval { .. } => {
                Some(Box::new(BoxDomain::unit_interval()))
            }
            ModelSpec::BmDisk => Some(Box::new(Ball::unit_disk())),
            ModelSpec::CustomPolynomial { .. } => None,
        }
    }
}
