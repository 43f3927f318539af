//! Principal eigen-elements of the sub-generator and the Green operator.

use nalgebra::{DMatrix, DVector};

use super::AbsorbingChain;
use crate::error::{Error, Result};
use crate::linalg::sorted_eigenvalues;

/// `(λ₀, α, η, γ)`: killing rate under the QSD, the QSD, the survival
/// eigenfunction normalized by `α·η = 1`, and the spectral gap of `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub lambda0: f64,
    pub alpha: DVector<f64>,
    pub eta: DVector<f64>,
    /// Gap between the two largest real parts of the spectrum of `Q`;
    /// infinite for a one-state chain.
    pub gamma: f64,
}

impl SpectralData {
    /// Ratio `λ₀ / (λ₀ + γ)` governing normalized powers of the Green operator.
    pub fn power_ratio(&self) -> f64 {
        self.lambda0 / (self.lambda0 + self.gamma)
    }

    /// Rate `γ / (λ₀ (λ₀ + γ))` governing the normalized `exp(tA)` flow.
    pub fn flow_rate(&self) -> f64 {
        if self.gamma.is_infinite() {
            return f64::INFINITY;
        }
        self.gamma / (self.lambda0 * (self.lambda0 + self.gamma))
    }
}

fn inverse_iteration(m: &DMatrix<f64>, shift: f64) -> Result<DVector<f64>> {
    let n = m.nrows();
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..4 {
        v = lu.solve(&v).ok_or_else(|| {
            Error::Numerical("singular shifted system in inverse iteration".into())
        })?;
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Numerical("inverse iteration diverged".into()));
        }
        v /= norm;
    }
    Ok(v)
}

/// Eigen-decomposition of `Q`: the principal eigenvalue `-λ₀` with its
/// left (α) and right (η) eigenvectors, and the spectral gap.
pub fn spectral(chain: &AbsorbingChain) -> Result<SpectralData> {
    if !chain.is_irreducible() {
        return Err(Error::Reducible);
    }
    let q = chain.q();
    let n = chain.n_states();
    let scale = q.abs().row_sum().max().max(f64::MIN_POSITIVE);
    let eigs = sorted_eigenvalues(q)?;
    let top = eigs[0];
    if top.im.abs() > 1e-8 * scale {
        return Err(Error::Numerical(format!(
            "top eigenvalue {top} is not real"
        )));
    }
    let gamma = match eigs.get(1) {
        Some(second) => top.re - second.re,
        None => f64::INFINITY,
    };
    if gamma <= 1e-10 * scale {
        return Err(Error::Numerical("top eigenvalue is not simple".into()));
    }

    let shift = top.re + 1e-9 * scale;
    let mut eta = inverse_iteration(q, shift)?;
    let mut alpha = inverse_iteration(&q.transpose(), shift)?;
    alpha /= alpha.sum();
    eta /= alpha.dot(&eta);
    let lambda0 = -(alpha.transpose() * q * &eta)[(0, 0)] / alpha.dot(&eta);

    let left_residual = (q.tr_mul(&alpha) + &alpha * lambda0).amax();
    let right_residual = (q * &eta + &eta * lambda0).amax();
    let tol = 1e-10 * scale * eta.amax().max(1.0);
    if left_residual > tol || right_residual > tol {
        return Err(Error::Numerical(format!(
            "eigenvector residuals {left_residual:e} / {right_residual:e} exceed {tol:e}"
        )));
    }
    if alpha.iter().any(|&a| a < -1e-12) || eta.iter().any(|&e| e < -1e-12 * eta.amax()) {
        return Err(Error::Numerical(
            "principal eigenvectors are not non-negative".into(),
        ));
    }
    debug_assert_eq!(alpha.len(), n);
    Ok(SpectralData {
        lambda0,
        alpha,
        eta,
        gamma,
    })
}

/// Green operator `A = (-Q)^{-1}`; row `x` integrates occupation from `x`.
pub fn green(chain: &AbsorbingChain) -> Result<DMatrix<f64>> {
    let minus_q = -chain.q();
    let a = minus_q
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::NoAbsorption)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoAbsorption);
    }
    Ok(a)
}

/// Mean absorption times `A·1`.
pub fn mean_absorption_times(chain: &AbsorbingChain) -> Result<DVector<f64>> {
    let ones = DVector::from_element(chain.n_states(), 1.0);
    (-chain.q()).lu().solve(&ones).ok_or(Error::NoAbsorption)
}
