use std::f64::consts::PI;

use super::bessel::{bessel_j0, bessel_j1, first_zero_j0};

/// Which one-dimensional coordinate of a state the reference describes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coordinate {
    Axis(usize),
    /// Euclidean norm.
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Density (π/2) sin(πx) on (0,1).
    Sine,
    /// Radial density j₀ r J₀(j₀ r) / J₁(j₀) on (0,1).
    Bessel { j0: f64 },
}

/// Known quasi-stationary distribution, described by the law of one
/// coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceQSD {
    pub name: String,
    pub lambda0: f64,
    pub coordinate: Coordinate,
    pub shape: Shape,
    pub provenance: String,
}

impl ReferenceQSD {
    pub fn cdf(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        match self.shape {
            Shape::Sine => (1.0 - (PI * y).cos()) / 2.0,
            Shape::Bessel { j0 } => (y * bessel_j1(j0 * y) / bessel_j1(j0)).clamp(0.0, 1.0),
        }
    }

    pub fn density(&self, y: f64) -> f64 {
        if !(0.0..=1.0).contains(&y) {
            return 0.0;
        }
        match self.shape {
            Shape::Sine => PI / 2.0 * (PI * y).sin(),
            Shape::Bessel { j0 } => (j0 * y * bessel_j0(j0 * y) / bessel_j1(j0)).max(0.0),
        }
    }

    /// Projects a state onto the reference coordinate.
    pub fn coordinate(&self, x: &[f64]) -> f64 {
        match self.coordinate {
            Coordinate::Axis(k) => x[k],
            Coordinate::Radial => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    /// Range of the coordinate.
    pub fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    /// Rows `(y, density, cdf)` on `points` equispaced nodes including the ends.
    pub fn table(&self, points: usize) -> Vec<(f64, f64, f64)> {
        let (lo, hi) = self.support();
        let last = points.saturating_sub(1).max(1) as f64;
        (0..points)
            .map(|i| {
                let y = lo + (hi - lo) * i as f64 / last;
                (y, self.density(y), self.cdf(y))
            })
            .collect()
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "bm-interval" => Some(reference_bm_interval()),
            "bm-disk" => Some(reference_bm_disk()),
            _ => None,
        }
    }
}

pub const REFERENCE_NAMES: [&str; 2] = ["bm-interval", "bm-disk"];

/// Brownian motion on (0,1) killed at the endpoints.
pub fn reference_bm_interval() -> ReferenceQSD {
    ReferenceQSD {
        name: "bm-interval".into(),
        lambda0: PI * PI / 2.0,
        coordinate: Coordinate::Axis(0),
        shape: Shape::Sine,
        provenance: "closed form: principal Dirichlet eigenfunction of -(1/2)d²/dx² on (0,1)"
            .into(),
    }
}

/// Planar Brownian motion killed on the unit circle; law of |X|.
pub fn reference_bm_disk() -> ReferenceQSD {
    let j0 = first_zero_j0();
    ReferenceQSD {
        name: "bm-disk".into(),
        lambda0: j0 * j0 / 2.0,
        coordinate: Coordinate::Radial,
        shape: Shape::Bessel { j0 },
        provenance: "Bessel series: J0 radial eigenfunction, first zero by bisection".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    #[test]
    fn interval_values() {
        let r = reference_bm_interval();
        assert!((r.lambda0 - 4.934_802_200_544_679).abs() < 1e-12);
        assert!((r.cdf(0.5) - 0.5).abs() < 1e-15);
        let mass = integrate(|y| r.density(y), 0.0, 1.0, 1e-13, 16).unwrap();
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn disk_values() {
        let r = reference_bm_disk();
        assert!((r.lambda0 - 2.891_592).abs() < 1e-6);
        let mass = integrate(|y| r.density(y), 0.0, 1.0, 1e-12, 16).unwrap();
        assert!((mass - 1.0).abs() < 1e-8);
        assert!((r.cdf(1.0) - 1.0).abs() < 1e-14);
        assert_eq!(r.cdf(0.0), 0.0);
        assert!((r.coordinate(&[0.6, 0.8]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cdf_matches_integrated_density() {
        for r in [reference_bm_interval(), reference_bm_disk()] {
            for y in [0.1, 0.35, 0.7, 0.95] {
                let m = integrate(|s| r.density(s), 0.0, y, 1e-12, 8).unwrap();
                assert!((m - r.cdf(y)).abs() < 1e-9, "{} at {y}", r.name);
            }
        }
    }

    #[test]
    fn cdf_is_monotone() {
        for r in [reference_bm_interval(), reference_bm_disk()] {
            let t = r.table(1001);
            assert_eq!(t.first().unwrap().2, 0.0);
            assert!((t.last().unwrap().2 - 1.0).abs() < 1e-14);
            assert!(t.windows(2).all(|w| w[1].2 >= w[0].2));
        }
    }
}
