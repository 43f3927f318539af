//! Finite-difference discretization of a one-dimensional or radial
//! generator as an absorbing chain on the interior nodes.

use nalgebra::DMatrix;

use crate::diffusion::DiffusionModel;
use crate::error::{param, Error, Result};
use crate::green_lab::{spectral, AbsorbingChain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FdGeometry {
    Interval {
        lower: f64,
        upper: f64,
    },
    /// Disk of the given radius centred at the origin, for a rotationally
    /// invariant model with isotropic diffusion; uses the radial generator.
    Disk {
        radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdSolution {
    pub lambda0: f64,
    pub nodes: Vec<f64>,
    /// Discrete QSD divided by the grid spacing.
    pub density: Vec<f64>,
    pub spacing: f64,
}

pub const MIN_GRID: usize = 16;

// Central differences, switching to upwind where they would give a
// negative jump rate.
fn rates(a: f64, b: f64, h: f64) -> (f64, f64) {
    let diff = a / (h * h);
    let adv = b / (2.0 * h);
    if diff >= adv.abs() {
        (diff - adv, diff + adv)
    } else {
        (diff + (-b).max(0.0) / h, diff + b.max(0.0) / h)
    }
}

/// Principal eigenvalue and QSD density of the generator discretized on
/// `grid` interior nodes, with absorbing (Dirichlet) boundary nodes removed.
pub fn fd_eigensolver<M: DiffusionModel + ?Sized>(
    model: &M,
    geometry: FdGeometry,
    grid: usize,
) -> Result<FdSolution> {
    if grid < MIN_GRID {
        return Err(param(
            "grid",
            format!("must be at least {MIN_GRID}, got {grid}"),
        ));
    }
    let (h, nodes): (f64, Vec<f64>) = match geometry {
        FdGeometry::Interval { lower, upper } => {
            if model.dim() != 1 {
                return Err(param("model", "interval geometry needs a 1-D model"));
            }
            if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                return Err(param("geometry", "interval needs finite lower < upper"));
            }
            let h = (upper - lower) / (grid + 1) as f64;
            (h, (0..grid).map(|i| lower + (i + 1) as f64 * h).collect())
        }
        FdGeometry::Disk { radius } => {
            if model.dim() != 2 {
                return Err(param("model", "disk geometry needs a 2-D model"));
            }
            if !(radius.is_finite() && radius > 0.0) {
                return Err(param("geometry", "radius must be positive"));
            }
            let h = radius / (grid as f64 + 0.5);
            (h, (0..grid).map(|i| (i as f64 + 0.5) * h).collect())
        }
    };

    let dim = model.dim();
    let noise = model.noise_dim();
    let mut drift = vec![0.0; dim];
    let mut sigma = vec![0.0; dim * noise];
    let mut q = DMatrix::zeros(grid, grid);
    for (i, &y) in nodes.iter().enumerate() {
        let point: Vec<f64> = match geometry {
            FdGeometry::Interval { .. } => vec![y],
            FdGeometry::Disk { .. } => vec![y, 0.0],
        };
        model.drift(&point, &mut drift);
        model.diffusion(&point, &mut sigma);
        let a = sigma[..noise].iter().map(|s| s * s).sum::<f64>() / 2.0;
        if !(a.is_finite() && a > 0.0) || drift.iter().any(|d| !d.is_finite()) {
            return Err(Error::ModelEvaluation { point });
        }
        let b = match geometry {
            FdGeometry::Interval { .. } => drift[0],
            FdGeometry::Disk { .. } => drift[0] + a / y,
        };
        let (mut down, up) = rates(a, b, h);
        if matches!(geometry, FdGeometry::Disk { .. }) && i == 0 {
            // the mirror node at -h/2 is the same point; no flux through the origin
            down = 0.0;
        }
        q[(i, i)] = -(down + up);
        if i > 0 {
            q[(i, i - 1)] = down;
        }
        if i + 1 < grid {
            q[(i, i + 1)] = up;
        }
    }

    let chain = AbsorbingChain::new(q)?;
    let data = spectral(&chain)?;
    let density = data.alpha.iter().map(|a| a / h).collect();
    Ok(FdSolution {
        lambda0: data.lambda0,
        nodes,
        density,
        spacing: h,
    })
}
