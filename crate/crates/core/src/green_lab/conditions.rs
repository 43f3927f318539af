//! Doeblin-type conditions (A1) and (A2) evaluated on a finite chain.

use nalgebra::DVector;

use super::{semigroup, spectral, AbsorbingChain};
use crate::error::{param, Result};
use crate::linalg::Propagator;

#[derive(Debug, Clone, PartialEq)]
pub struct A1A2Report {
    pub t0: f64,
    /// Mass of the column-wise minimum of the conditioned kernel at `t0`.
    pub c1: f64,
    /// Minorizing probability; `None` when `c1 = 0`.
    pub nu: Option<DVector<f64>>,
    /// Infimum of `P_ν(t < τ) / P_x(t < τ)` over `t ≥ 0` and `x`.
    pub c2: Option<f64>,
}

impl A1A2Report {
    pub fn satisfied(&self) -> bool {
        self.c1 > 0.0 && self.c2.is_some_and(|c| c > 0.0)
    }
}

const GRID_POINTS: usize = 400;

/// Evaluates (A1) at `t0` and estimates the (A2) constant on a time grid,
/// closing the tail beyond the grid with the limit `ν(η) / η(x)` when the
/// chain's spectral data is available.
pub fn check_a1_a2(chain: &AbsorbingChain, t0: f64) -> Result<A1A2Report> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(param("t0", "must be positive and finite"));
    }
    let n = chain.n_states();
    let kernel = semigroup(chain, t0)?;
    let mut column_min = DVector::from_element(n, f64::INFINITY);
    for x in 0..n {
        let survival = kernel.row(x).sum();
        if survival <= 0.0 {
            column_min.fill(0.0);
            break;
        }
        for j in 0..n {
            column_min[j] = column_min[j].min(kernel[(x, j)] / survival);
        }
    }
    let c1 = column_min.sum().min(1.0);
    if c1 <= 0.0 {
        return Ok(A1A2Report {
            t0,
            c1: 0.0,
            nu: None,
            c2: None,
        });
    }
    let nu = &column_min / column_min.sum();

    let spectral = spectral(chain).ok();
    let horizon = match &spectral {
        Some(s) if s.gamma.is_finite() => t0 + 40.0 / s.gamma,
        Some(s) => t0 + 40.0 / s.lambda0,
        None => t0 + 40.0 / chain.absorb_rate().max().max(1e-3),
    };
    let propagator = Propagator::new(chain.q());
    let ones = DVector::from_element(n, 1.0);
    let mut c2 = f64::INFINITY;
    for k in 0..=GRID_POINTS {
        let t = horizon * k as f64 / GRID_POINTS as f64;
        let survival = propagator.exp(t) * &ones;
        let from_nu = nu.dot(&survival);
        for x in 0..n {
            if survival[x] > 0.0 {
                c2 = c2.min(from_nu / survival[x]);
            }
        }
    }
    if let Some(s) = &spectral {
        let nu_eta = nu.dot(&s.eta);
        for x in 0..n {
            c2 = c2.min(nu_eta / s.eta[x]);
        }
    }
    Ok(A1A2Report {
        t0,
        c1,
        nu: Some(nu),
        c2: Some(c2.min(1.0)),
    })
}
