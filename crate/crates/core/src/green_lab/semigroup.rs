//! Sub-Markov semigroup `P_t = exp(tQ)` and conditioned laws.

use nalgebra::{DMatrix, DVector};

use super::AbsorbingChain;
use crate::error::{param, Error, Result};
use crate::linalg::Propagator;

/// Smallest survival probability `conditional_law` will divide by.
pub const SURVIVAL_FLOOR: f64 = 1e-300;

/// `P_t = exp(tQ)`; `P_t[x][y] = P_x(X_t = y, t < τ_∂)`.
pub fn semigroup(chain: &AbsorbingChain, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(param("t", "must be finite and non-negative"));
    }
    let n = chain.n_states();
    if t == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut p = clamp_probabilities(Propagator::new(chain.q()).exp(t));
    // rounding can push a row sum just above one
    for mut row in p.row_iter_mut() {
        let sum = row.sum();
        if sum > 1.0 {
            row /= sum;
            while row.sum() > 1.0 {
                row *= 1.0 - f64::EPSILON;
            }
        }
    }
    Ok(p)
}

pub(crate) fn clamp_probabilities(m: DMatrix<f64>) -> DMatrix<f64> {
    m.map(|p| p.clamp(0.0, 1.0))
}

pub(crate) fn check_probability_vector(
    mu: &DVector<f64>,
    n: usize,
    name: &'static str,
) -> Result<()> {
    if mu.len() != n {
        return Err(param(
            name,
            format!("expected {n} entries, got {}", mu.len()),
        ));
    }
    if mu.iter().any(|&m| !(m >= 0.0)) || (mu.sum() - 1.0).abs() > 1e-9 {
        return Err(param(name, "must be a probability vector"));
    }
    Ok(())
}

/// Law of `X_t` under `P_μ` conditioned on survival: `μP_t / μP_t 1`.
pub fn conditional_law(chain: &AbsorbingChain, mu: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    check_probability_vector(mu, chain.n_states(), "mu")?;
    let p = semigroup(chain, t)?;
    let law = p.tr_mul(mu);
    let survival = law.sum();
    if !(survival > SURVIVAL_FLOOR) {
        return Err(Error::Horizon { t });
    }
    Ok(law / survival)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green_lab::spectral;
    use crate::linalg::tv_distance;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn identity_at_zero_and_scalar_decay() {
        let c = AbsorbingChain::two_state_example();
        assert!((semigroup(&c, 0.0).unwrap() - DMatrix::identity(2, 2)).amax() < 1e-15);
        let one = AbsorbingChain::from_rows(&[vec![-1.5]]).unwrap();
        assert!((semigroup(&one, 2.0).unwrap()[(0, 0)] - (-3.0f64).exp()).abs() < 1e-15);
        assert!(semigroup(&c, -1.0).is_err());
    }

    #[test]
    fn chapman_kolmogorov_and_sub_markov() {
        let mut rng = stream(4, 0);
        for _ in 0..20 {
            let c = AbsorbingChain::random(rng.random_range(2..=10), &mut rng);
            let (s, t) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
            let lhs = semigroup(&c, s).unwrap() * semigroup(&c, t).unwrap();
            let rhs = semigroup(&c, s + t).unwrap();
            assert!((lhs - rhs).amax() <= 1e-10);
            let p = semigroup(&c, t).unwrap();
            assert!(p.column_sum().iter().all(|&r| (0.0..=1.0).contains(&r)));
        }
    }

    #[test]
    fn qsd_is_a_fixed_point() {
        let mut rng = stream(5, 0);
        let c = AbsorbingChain::random(6, &mut rng);
        let s = spectral(&c).unwrap();
        for t in [0.0, 0.5, 4.0] {
            let law = conditional_law(&c, &s.alpha, t).unwrap();
            assert!(tv_distance(&law, &s.alpha) < 1e-12);
        }
        let mu = DVector::from_fn(6, |i, _| if i == 2 { 1.0 } else { 0.0 });
        assert_eq!(conditional_law(&c, &mu, 0.0).unwrap(), mu);
    }

    #[test]
    fn two_state_conditioned_law_decays_at_the_gap() {
        let c = AbsorbingChain::two_state_example();
        let alpha = DVector::from_element(2, 0.5);
        let mu = DVector::from_vec(vec![1.0, 0.0]);
        let logs: Vec<f64> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&t| tv_distance(&conditional_law(&c, &mu, t).unwrap(), &alpha).ln())
            .collect();
        for w in logs.windows(2) {
            assert!((w[1] - w[0] + 2.0).abs() <= 0.01);
        }
    }

    #[test]
    fn survival_underflow_is_a_horizon_error() {
        let c = AbsorbingChain::from_rows(&[vec![-10.0]]).unwrap();
        let mu = DVector::from_vec(vec![1.0]);
        assert!(matches!(
            conditional_law(&c, &mu, 100.0),
            Err(Error::Horizon { .. })
        ));
    }
}
