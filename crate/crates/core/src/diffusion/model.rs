//! Drift and diffusion coefficients of `dX = b(X) dt + σ(X) dB`.

/// Coefficients of an Itô diffusion in `R^dim` driven by a `noise_dim`
/// dimensional Brownian motion.
///
/// `diffusion` writes σ(x) row-major into a `dim * noise_dim` buffer.
pub trait DiffusionModel: Send + Sync {
    fn dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn drift(&self, x: &[f64], out: &mut [f64]);
    fn diffusion(&self, x: &[f64], out: &mut [f64]);
}

impl<M: DiffusionModel + ?Sized> DiffusionModel for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn noise_dim(&self) -> usize {
        (**self).noise_dim()
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        (**self).drift(x, out)
    }
    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        (**self).diffusion(x, out)
    }
}

impl<M: DiffusionModel + ?Sized> DiffusionModel for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn noise_dim(&self) -> usize {
        (**self).noise_dim()
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        (**self).drift(x, out)
    }
    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        (**self).diffusion(x, out)
    }
}

/// Standard Brownian motion: b ≡ 0, σ ≡ I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianMotion {
    pub dim: usize,
}

impl BrownianMotion {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self { dim }
    }
}

impl DiffusionModel for BrownianMotion {
    fn dim(&self) -> usize {
        self.dim
    }
    fn noise_dim(&self) -> usize {
        self.dim
    }
    fn drift(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.dim {
            out[i * self.dim + i] = 1.0;
        }
    }
}

/// Constant drift vector with isotropic constant noise `sigma · I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDrift {
    pub drift: Vec<f64>,
    pub sigma: f64,
}

impl ConstantDrift {
    pub fn new(drift: Vec<f64>, sigma: f64) -> Self {
        assert!(!drift.is_empty(), "dimension must be at least 1");
        Self { drift, sigma }
    }
}

impl DiffusionModel for ConstantDrift {
    fn dim(&self) -> usize {
        self.drift.len()
    }
    fn noise_dim(&self) -> usize {
        self.drift.len()
    }
    fn drift(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.drift);
    }
    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        let d = self.drift.len();
        out.fill(0.0);
        for i in 0..d {
            out[i * d + i] = self.sigma;
        }
    }
}

/// Separable polynomial coefficients.
///
/// Coordinate `i` has drift `Σ_k drift[i][k] x_i^k` and its own noise
/// channel with amplitude `Σ_k diffusion[i][k] x_i^k`; σ is diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialModel {
    drift: Vec<Vec<f64>>,
    diffusion: Vec<Vec<f64>>,
}

impl PolynomialModel {
    pub fn new(drift: Vec<Vec<f64>>, diffusion: Vec<Vec<f64>>) -> crate::Result<Self> {
        if drift.is_empty() {
            return Err(crate::error::param(
                "drift",
                "at least one coordinate required",
            ));
        }
        if drift.len() != diffusion.len() {
            return Err(crate::error::param(
                "diffusion",
                format!(
                    "{} diffusion polynomials for {} coordinates",
                    diffusion.len(),
                    drift.len()
                ),
            ));
        }
        Ok(Self { drift, diffusion })
    }
}

fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl DiffusionModel for PolynomialModel {
    fn dim(&self) -> usize {
        self.drift.len()
    }
    fn noise_dim(&self) -> usize {
        self.drift.len()
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        for (i, poly) in self.drift.iter().enumerate() {
            out[i] = horner(poly, x[i]);
        }
    }
    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        let d = self.drift.len();
        out.fill(0.0);
        for (i, poly) in self.diffusion.iter().enumerate() {
            out[i * d + i] = horner(poly, x[i]);
        }
    }
}
