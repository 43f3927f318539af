//! The measure-valued flow `dφ/dt = φA − (φA1)φ`.

use nalgebra::{DMatrix, DVector};

use super::{green, AbsorbingChain};
use crate::error::{param, Error, Result};
use crate::green_lab::powers::shifted_green_propagator;
use crate::linalg::{normalized, tv_distance};

/// `F(ν) = νA − (νA1) ν`, with measures as column vectors.
pub fn flow_field(a: &DMatrix<f64>, nu: &DVector<f64>) -> DVector<f64> {
    let nu_a = a.tr_mul(nu);
    let mass = nu_a.sum();
    nu_a - nu * mass
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub measure: DVector<f64>,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub states: Vec<FlowState>,
    /// Largest TV gap to `νe^{tA} / νe^{tA}1` over the accepted steps.
    pub max_tv_to_closed_form: f64,
    /// Largest `|Σφ_t − 1|` along the trajectory.
    pub max_mass_defect: f64,
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates the flow from `nu` up to `horizon` with an embedded
/// Dormand–Prince pair at local tolerance `tol`, comparing every accepted
/// step against the closed form.
pub fn flow_ode(
    chain: &AbsorbingChain,
    nu: &DVector<f64>,
    horizon: f64,
    tol: f64,
) -> Result<FlowTrajectory> {
    super::semigroup::check_probability_vector(nu, chain.n_states(), "nu")?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(param("horizon", "must be positive and finite"));
    }
    if !(tol > 0.0) {
        return Err(param("tol", "must be positive"));
    }
    let a = green(chain)?;
    let closed_form = shifted_green_propagator(&a)?;
    let a_norm = a.abs().row_sum().max().max(f64::MIN_POSITIVE);

    let mut t = 0.0;
    let mut y = nu.clone();
    let mut step = (0.01 / a_norm).min(horizon);
    let mut states = vec![FlowState {
        measure: y.clone(),
        time: 0.0,
    }];
    let mut max_tv: f64 = 0.0;
    let mut max_mass_defect: f64 = (y.sum() - 1.0).abs();
    let mut k: Vec<DVector<f64>> = vec![DVector::zeros(y.len()); 7];
    k[0] = flow_field(&a, &y);
    while t < horizon {
        if step < 1e-14 * horizon {
            return Err(Error::Stiffness { t });
        }
        // land exactly on the horizon; rounding can leave a sliver
        let last = t + step >= horizon * (1.0 - 1e-12);
        let h = if last { horizon - t } else { step };
        for stage in 1..7 {
            let mut arg = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage) {
                if A[stage][j] != 0.0 {
                    arg.axpy(h * A[stage][j], kj, 1.0);
                }
            }
            k[stage] = flow_field(&a, &arg);
        }
        let mut next = y.clone();
        let mut err = DVector::zeros(y.len());
        for j in 0..7 {
            next.axpy(h * B5[j], &k[j], 1.0);
            err.axpy(h * (B5[j] - B4[j]), &k[j], 1.0);
        }
        let ratio = err
            .iter()
            .zip(y.iter().zip(next.iter()))
            .map(|(e, (a, b))| e.abs() / (tol * (1.0 + a.abs().max(b.abs()))))
            .fold(
                0.0,
                |m, r| if r.is_nan() { f64::INFINITY } else { m.max(r) },
            );
        if ratio <= 1.0 {
            t = if last { horizon } else { t + h };
            y = next;
            // FSAL: the last stage is the derivative at the new point.
            k[0] = k[6].clone();
            let exact = normalized(&closed_form.apply_left(nu, t));
            max_tv = max_tv.max(tv_distance(&y, &exact));
            max_mass_defect = max_mass_defect.max((y.sum() - 1.0).abs());
            states.push(FlowState {
                measure: y.clone(),
                time: t,
            });
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            0.9 * ratio.powf(-0.2)
        };
        step = h * factor.clamp(0.2, 5.0);
    }
    Ok(FlowTrajectory {
        states,
        max_tv_to_closed_form: max_tv,
        max_mass_defect,
    })
}
