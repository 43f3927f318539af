//! Bounded open sets with a distance-to-boundary function.

/// Axis-aligned bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// A bounded open set `D ⊂ R^dim`.
///
/// Implementations must keep `contains(x)` and `boundary_distance(x) > 0`
/// in agreement; the distance is zero outside `D`.
pub trait Domain: Send + Sync {
    fn dim(&self) -> usize;
    fn contains(&self, x: &[f64]) -> bool;
    fn boundary_distance(&self, x: &[f64]) -> f64;
    fn bounding_box(&self) -> BoundingBox;
    fn interior_point(&self) -> Vec<f64>;
    /// Radius of the largest inscribed ball.
    fn inradius(&self) -> f64;
}

impl<D: Domain + ?Sized> Domain for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }
    fn boundary_distance(&self, x: &[f64]) -> f64 {
        (**self).boundary_distance(x)
    }
    fn bounding_box(&self) -> BoundingBox {
        (**self).bounding_box()
    }
    fn interior_point(&self) -> Vec<f64> {
        (**self).interior_point()
    }
    fn inradius(&self) -> f64 {
        (**self).inradius()
    }
}

impl<D: Domain + ?Sized> Domain for Box<D> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }
    fn boundary_distance(&self, x: &[f64]) -> f64 {
        (**self).boundary_distance(x)
    }
    fn bounding_box(&self) -> BoundingBox {
        (**self).bounding_box()
    }
    fn interior_point(&self) -> Vec<f64> {
        (**self).interior_point()
    }
    fn inradius(&self) -> f64 {
        (**self).inradius()
    }
}

/// Open box `Π (lower_i, upper_i)`; the one-dimensional case is an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> crate::Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(crate::error::param(
                "domain",
                "lower and upper must be non-empty and of equal length",
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite())
        {
            return Err(crate::error::param(
                "domain",
                "each side must satisfy lower < upper",
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lower: f64, upper: f64) -> crate::Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    /// The unit interval (0, 1).
    pub fn unit_interval() -> Self {
        Self {
            lower: vec![0.0],
            upper: vec![1.0],
        }
    }
}

impl Domain for BoxDomain {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&xi, (&l, &u))| xi > l && xi < u)
    }

    fn boundary_distance(&self, x: &[f64]) -> f64 {
        let d = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&l, &u))| (xi - l).min(u - xi))
            .fold(f64::INFINITY, f64::min);
        d.max(0.0)
    }

    fn bounding_box(&self) -> BoundingBox {
        BoundingBox {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    fn interior_point(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    fn inradius(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (u - l))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Open Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> crate::Result<Self> {
        if center.is_empty() {
            return Err(crate::error::param("domain", "center must be non-empty"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(crate::error::param("radius", "must be positive and finite"));
        }
        Ok(Self { center, radius })
    }

    /// The unit disk in the plane.
    pub fn unit_disk() -> Self {
        Self {
            center: vec![0.0, 0.0],
            radius: 1.0,
        }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn distance_from_center(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt()
    }
}

impl Domain for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.distance_from_center(x) < self.radius
    }

    fn boundary_distance(&self, x: &[f64]) -> f64 {
        (self.radius - self.distance_from_center(x)).max(0.0)
    }

    fn bounding_box(&self) -> BoundingBox {
        BoundingBox {
            lower: self.center.iter().map(|c| c - self.radius).collect(),
            upper: self.center.iter().map(|c| c + self.radius).collect(),
        }
    }

    fn interior_point(&self) -> Vec<f64> {
        self.center.clone()
    }

    fn inradius(&self) -> f64 {
        self.radius
    }
}
