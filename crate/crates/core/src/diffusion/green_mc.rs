//! Monte Carlo estimate of the Green operator `Af(x) = E_x ∫_0^τ f(X_s) ds`.

use rayon::prelude::*;

use super::{visit_path, DiffusionModel, Domain, SimOptions};
use crate::error::{param, Result};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Averages `∫_0^τ f(X_s) ds` over `n_samples` independent paths from `x`.
///
/// Path `i` draws from `stream(master_seed, i)`, so the result does not
/// depend on how rayon schedules the paths.
#[allow(clippy::too_many_arguments)]
pub fn estimate_green_mc<M, D, F>(
    model: &M,
    domain: &D,
    x: &[f64],
    f: F,
    n_samples: usize,
    dt: f64,
    master_seed: u64,
    opts: &SimOptions,
) -> Result<GreenEstimate>
where
    M: DiffusionModel + ?Sized,
    D: Domain + ?Sized,
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_samples < 2 {
        return Err(param(
            "n_samples",
            "at least two samples are needed for a standard error",
        ));
    }
    let samples = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(master_seed, i);
            let mut integral = 0.0;
            visit_path(model, domain, x, dt, &mut rng, opts, |state, weight| {
                integral += f(state) * weight;
            })?;
            Ok(integral)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    Ok(GreenEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{BoxDomain, BrownianMotion};

    #[test]
    fn zero_function_has_zero_estimate() {
        let g = estimate_green_mc(
            &BrownianMotion::new(1),
            &BoxDomain::unit_interval(),
            &[0.5],
            |_| 0.0,
            50,
            1e-3,
            1,
            &SimOptions::default(),
        )
        .unwrap();
        assert_eq!(
            g,
            GreenEstimate {
                estimate: 0.0,
                std_error: 0.0
            }
        );
    }

    #[test]
    fn needs_two_samples() {
        let r = estimate_green_mc(
            &BrownianMotion::new(1),
            &BoxDomain::unit_interval(),
            &[0.5],
            |_| 1.0,
            1,
            1e-3,
            1,
            &SimOptions::default(),
        );
        assert!(r.is_err());
    }

    /// Lipschitz surrogate: the estimated map x ↦ A1(x) follows x(1-x).
    #[test]
    fn green_of_one_tracks_expected_exit_time() {
        let dt = 1e-4;
        for x in [0.2, 0.4, 0.6, 0.8] {
            let g = estimate_green_mc(
                &BrownianMotion::new(1),
                &BoxDomain::unit_interval(),
                &[x],
                |_| 1.0,
                4000,
                dt,
                17,
                &SimOptions::default(),
            )
            .unwrap();
            let exact = x * (1.0 - x);
            assert!(
                (g.estimate - exact).abs() <= 3.0 * g.std_error + 2.0 * dt.sqrt(),
                "x = {x}: {} vs {exact}",
                g.estimate
            );
        }
    }
}
