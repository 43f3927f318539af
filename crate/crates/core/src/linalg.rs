//! Small dense helpers: total variation, eigenvalues, and `exp(tM)`.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};

/// Half the ℓ¹ distance between two vectors.
pub fn tv_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    0.5 * a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
}

/// `v / Σ v`.
pub fn normalized(v: &DVector<f64>) -> DVector<f64> {
    v / v.sum()
}

/// Eigenvalues sorted by decreasing real part.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let mut eigs: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(eigs)
}

/// Upper bound on the 1-norm condition number accepted for an eigenbasis.
pub const MAX_EIGENBASIS_CONDITION: f64 = 1e8;

/// `exp(tM)` for a fixed square matrix `M`, evaluated either through an
/// eigen-decomposition or, when the eigenbasis is ill-conditioned, by
/// scaling and squaring a truncated Taylor series.
#[derive(Debug, Clone)]
pub struct Propagator {
    matrix: DMatrix<f64>,
    eigen: Option<Eigenbasis>,
}

#[derive(Debug, Clone)]
struct Eigenbasis {
    values: Vec<Complex<f64>>,
    vectors: DMatrix<Complex<f64>>,
    inverse: DMatrix<Complex<f64>>,
}

fn norm1<T: nalgebra::ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl Eigenbasis {
    fn try_new(m: &DMatrix<f64>) -> Option<Self> {
        let n = m.nrows();
        let values = sorted_eigenvalues(m).ok()?;
        let mc: DMatrix<Complex<f64>> = m.map(|x| Complex::new(x, 0.0));
        let scale = norm1(m).max(1e-300);
        let mut vectors = DMatrix::<Complex<f64>>::zeros(n, n);
        for (k, &lambda) in values.iter().enumerate() {
            // Inverse iteration with a shift just off the eigenvalue.
            let shift = lambda + Complex::new(1e-10, 1e-10) * scale;
            let mut shifted = mc.clone();
            for i in 0..n {
                shifted[(i, i)] -= shift;
            }
            let lu = shifted.lu();
            let mut v = DVector::<Complex<f64>>::from_fn(n, |i, _| {
                Complex::new(1.0 + 0.37 * i as f64, 0.11 * (i as f64 + 1.0).sin())
            });
            for _ in 0..3 {
                v = lu.solve(&v)?;
                let norm = v.norm();
                if !norm.is_finite() || norm == 0.0 {
                    return None;
                }
                v /= Complex::new(norm, 0.0);
            }
            vectors.set_column(k, &v);
        }
        let inverse = vectors.clone().lu().try_inverse()?;
        let condition = norm1(&vectors) * norm1(&inverse);
        if !condition.is_finite() || condition > MAX_EIGENBASIS_CONDITION {
            return None;
        }
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(values.clone()));
        let residual = norm1(&(&mc * &vectors - &vectors * lambda));
        if residual > 1e-9 * scale.max(1.0) {
            return None;
        }
        Some(Self {
            values,
            vectors,
            inverse,
        })
    }
}

fn series_exp(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let b = m * t;
    let norm = norm1(&b);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = b / 2f64.powi(squarings);
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=30 {
        term = &term * &b / k as f64;
        result += &term;
        if norm1(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

impl Propagator {
    pub fn new(matrix: &DMatrix<f64>) -> Self {
        assert!(matrix.is_square(), "propagator needs a square matrix");
        Self {
            matrix: matrix.clone(),
            eigen: Eigenbasis::try_new(matrix),
        }
    }

    /// Whether the well-conditioned eigen route is in use.
    pub fn is_diagonalized(&self) -> bool {
        self.eigen.is_some()
    }

    /// Eigenvalues, when diagonalized.
    pub fn eigenvalues(&self) -> Option<&[Complex<f64>]> {
        self.eigen.as_ref().map(|e| e.values.as_slice())
    }

    /// `exp(tM)`.
    pub fn exp(&self, t: f64) -> DMatrix<f64> {
        match &self.eigen {
            Some(e) => {
                let n = self.matrix.nrows();
                let mut scaled = e.vectors.clone();
                for (k, lambda) in e.values.iter().enumerate() {
                    let factor = (lambda * t).exp();
                    for i in 0..n {
                        scaled[(i, k)] *= factor;
                    }
                }
                (scaled * &e.inverse).map(|z| z.re)
            }
            None => series_exp(&self.matrix, t),
        }
    }

    /// `vᵀ exp(tM)`, returned as a column vector.
    pub fn apply_left(&self, v: &DVector<f64>, t: f64) -> DVector<f64> {
        match &self.eigen {
            Some(e) => {
                let vc = v.map(|x| Complex::new(x, 0.0));
                let mut coeffs = e.vectors.tr_mul(&vc);
                for (c, lambda) in coeffs.iter_mut().zip(&e.values) {
                    *c *= (lambda * t).exp();
                }
                e.inverse.tr_mul(&coeffs).map(|z| z.re)
            }
            None => series_exp(&self.matrix, t).tr_mul(v),
        }
    }

    /// Scalar `vᵀ exp(tM) w` as a sum of exponentials; the coefficients
    /// are returned so callers can evaluate it at many `t` cheaply.
    pub fn bilinear_modes(
        &self,
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Option<Vec<(Complex<f64>, Complex<f64>)>> {
        let e = self.eigen.as_ref()?;
        let left = e.vectors.tr_mul(&v.map(|x| Complex::new(x, 0.0)));
        let right = &e.inverse * w.map(|x| Complex::new(x, 0.0));
        Some(
            e.values
                .iter()
                .enumerate()
                .map(|(k, &lambda)| (left[k] * right[k], lambda))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0])
    }

    #[test]
    fn tv_is_half_l1() {
        let a = DVector::from_vec(vec![0.5, 0.5]);
        let b = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(tv_distance(&a, &b), 0.5);
    }

    #[test]
    fn eigen_and_series_routes_agree() {
        let q = two_state();
        let p = Propagator::new(&q);
        assert!(p.is_diagonalized());
        for t in [0.0, 0.3, 2.0, 7.5] {
            let diff = (p.exp(t) - series_exp(&q, t)).abs().max();
            assert!(diff < 1e-13, "t = {t}: {diff}");
        }
        // exp(tQ) = e^{-t}/2 [[1,1],[1,1]] + e^{-3t}/2 [[1,-1],[-1,1]]
        let t = 0.7;
        let e = p.exp(t);
        let a = (-t).exp() / 2.0;
        let b = (-3.0 * t).exp() / 2.0;
        assert!((e[(0, 0)] - (a + b)).abs() < 1e-14);
        assert!((e[(0, 1)] - (a - b)).abs() < 1e-14);
    }

    #[test]
    fn defective_matrix_falls_back_to_series() {
        let jordan = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let p = Propagator::new(&jordan);
        assert!(!p.is_diagonalized());
        let t = 1.3;
        let e = p.exp(t);
        let decay = (-t).exp();
        assert!((e[(0, 0)] - decay).abs() < 1e-13);
        assert!((e[(0, 1)] - t * decay).abs() < 1e-13);
    }

    #[test]
    fn complex_spectrum_is_handled() {
        let rotation =
            DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.0, -2.0, -1.0, 0.5, 0.0, 0.0, -3.0]);
        let p = Propagator::new(&rotation);
        assert!(p.is_diagonalized());
        let diff = (p.exp(1.7) - series_exp(&rotation, 1.7)).abs().max();
        assert!(diff < 1e-12);
        let v = DVector::from_vec(vec![0.2, 0.3, 0.5]);
        let w = DVector::from_vec(vec![1.0, -1.0, 2.0]);
        let modes = p.bilinear_modes(&v, &w).unwrap();
        let by_modes: f64 = modes.iter().map(|(c, l)| (c * (l * 1.7).exp()).re).sum();
        let direct = p.apply_left(&v, 1.7).dot(&w);
        assert!((by_modes - direct).abs() < 1e-12);
    }
}
