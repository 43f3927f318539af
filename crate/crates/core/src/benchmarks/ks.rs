use crate::error::{Error, Result};

/// Kolmogorov–Smirnov distance between a weighted sample and a reference
/// CDF, with the supremum taken over the sample's support using the
/// right-continuous empirical CDF. Masses need not be normalized.
pub fn ks_distance<I, F>(samples: I, cdf: F) -> Result<f64>
where
    I: IntoIterator<Item = (f64, f64)>,
    F: Fn(f64) -> f64,
{
    let mut samples: Vec<(f64, f64)> = samples.into_iter().collect();
    if samples.is_empty() {
        return Err(Error::Precondition("empirical measure is empty".into()));
    }
    if samples.iter().any(|s| !s.0.is_finite() || !(s.1 >= 0.0)) {
        return Err(Error::Precondition(
            "samples must be finite with non-negative mass".into(),
        ));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = samples.iter().map(|s| s.1).sum();
    if !(total > 0.0) {
        return Err(Error::Precondition(
            "empirical measure has zero mass".into(),
        ));
    }
    let mut acc = 0.0;
    let mut sup = 0.0_f64;
    for (i, &(value, mass)) in samples.iter().enumerate() {
        acc += mass;
        if samples.get(i + 1).is_some_and(|next| next.0 == value) {
            continue;
        }
        sup = sup.max((acc / total - cdf(value)).abs());
    }
    Ok(sup.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn point_mass_at_median() {
        let d = ks_distance([(0.5, 1.0)], |x| x).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(ks_distance(std::iter::empty(), |x| x).is_err());
        assert!(ks_distance([(0.5, 0.0)], |x| x).is_err());
    }

    #[test]
    fn grid_discretization() {
        let cdf = |x: f64| (1.0 - (std::f64::consts::PI * x).cos()) / 2.0;
        let n = 10_000;
        // each grid cell's mass placed at its right end
        let samples = (1..=n).map(|i| {
            let x = i as f64 / n as f64;
            (x, cdf(x) - cdf(x - 1.0 / n as f64))
        });
        assert!(ks_distance(samples, cdf).unwrap() <= 1e-4);
    }

    #[test]
    fn uniform_draws() {
        let mut rng = crate::rng::stream(3, 0);
        let samples: Vec<(f64, f64)> = (0..100_000).map(|_| (rng.random::<f64>(), 1.0)).collect();
        let d = ks_distance(samples, |x| x).unwrap();
        assert!(d <= 1.36 / (1e5f64).sqrt(), "{d}");
    }

    #[test]
    fn ties_are_merged() {
        let d = ks_distance([(0.3, 1.0), (0.3, 1.0), (0.6, 1.0)], |x| x).unwrap();
        assert!((d - 0.4).abs() < 1e-15);
    }
}
