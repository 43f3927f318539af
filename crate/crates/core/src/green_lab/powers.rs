//! Powers of the Green operator: the integral identity for `μAⁿf` and the
//! geometric convergence of `μAⁿ / μAⁿ1` and of the `exp(tA)` flow to α.

use nalgebra::{DMatrix, DVector};

use super::{green, spectral, AbsorbingChain, SpectralData};
use crate::error::{param, Error, Result};
use crate::linalg::{sorted_eigenvalues, Propagator};
use crate::quadrature::integrate;

/// A series that never rises above this is treated as already converged.
pub const DISTANCE_FLOOR: f64 = 1e-11;

/// Distances below this are left out of slope fits.
pub const UNDERFLOW_FLOOR: f64 = 1e-250;

/// Allowed excess of a fitted log-rate over the predicted one.
pub const RATE_SLACK: f64 = 0.01;

/// `μAⁿf` computed two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenPower {
    /// By repeated linear solves against `-Q`.
    pub value: f64,
    /// By quadrature of `∫ uⁿ⁻¹/(n-1)! μP_u f du`.
    pub quadrature: f64,
    /// `|value - quadrature| / μAⁿ|f|`.
    pub relative_gap: f64,
}

/// Largest gap between the two routes that `green_power` accepts.
pub const GREEN_POWER_TOL: f64 = 1e-6;

fn left_power(
    minus_q_t: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    v: &DVector<f64>,
    n: usize,
) -> Result<DVector<f64>> {
    let mut v = v.clone();
    for _ in 0..n {
        v = minus_q_t.solve(&v).ok_or(Error::NoAbsorption)?;
    }
    Ok(v)
}

/// Regularized upper incomplete gamma `Q(n, x)` for integer `n ≥ 1`.
fn gamma_upper_tail(n: usize, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..n {
        term *= x / k as f64;
        sum += term;
    }
    (-x + sum.ln()).exp()
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `μAⁿf`, cross-checked against its integral representation over the
/// semigroup. Fails if the two disagree by more than [`GREEN_POWER_TOL`].
pub fn green_power(
    chain: &AbsorbingChain,
    mu: &DVector<f64>,
    f: &DVector<f64>,
    n: usize,
) -> Result<GreenPower> {
    let states = chain.n_states();
    if n == 0 {
        return Err(param("n", "must be at least 1"));
    }
    if mu.len() != states || f.len() != states {
        return Err(param("mu", "mu and f must have one entry per state"));
    }
    let lu = (-chain.q()).transpose().lu();
    let mu_an = left_power(&lu, mu, n)?;
    let value = mu_an.dot(f);
    let scale = mu_an.dot(&f.abs()).abs().max(f64::MIN_POSITIVE);
    let f_sup = f.amax();

    let q = chain.q();
    let propagator = Propagator::new(q);
    let ones = DVector::from_element(states, 1.0);
    let decay = -sorted_eigenvalues(q)?[0].re;
    if !(decay > 0.0) {
        return Err(Error::NoAbsorption);
    }
    let modes = propagator.bilinear_modes(mu, f);
    let eval = |u: f64| -> f64 {
        match &modes {
            Some(m) => m.iter().map(|(c, l)| (c * (l * u).exp()).re).sum(),
            None => propagator.apply_left(mu, u).dot(f),
        }
    };
    // |μP_u f| ≤ ‖f‖∞ μP_u 1 ≤ ‖f‖∞ C e^{-λ₀u}
    let envelope = match propagator.bilinear_modes(mu, &ones) {
        Some(m) => m.iter().map(|(c, _)| c.norm()).sum::<f64>(),
        None => {
            let horizon = 20.0 / decay;
            (0..=200)
                .map(|k| {
                    let u = horizon * k as f64 / 200.0;
                    (decay * u).exp() * propagator.apply_left(mu, u).dot(&ones)
                })
                .fold(1.0, f64::max)
                * 2.0
        }
    };
    let ln_norm = ln_factorial(n - 1);
    let tail = |upper: f64| {
        envelope * f_sup * decay.powi(-(n as i32)) * gamma_upper_tail(n, decay * upper)
    };
    let mut upper = (n as f64 + 10.0) / decay;
    while tail(upper) >= 1e-12 * scale {
        upper *= 1.5;
        if !upper.is_finite() || upper > 1e12 / decay {
            return Err(Error::Numerical(
                "could not bound the quadrature tail".into(),
            ));
        }
    }
    let weight = |u: f64| {
        if n == 1 {
            1.0
        } else if u == 0.0 {
            0.0
        } else {
            ((n - 1) as f64 * u.ln() - ln_norm).exp()
        }
    };
    let quadrature = integrate(|u| weight(u) * eval(u), 0.0, upper, 1e-10 * scale, 64)?;
    let relative_gap = (value - quadrature).abs() / scale;
    if relative_gap > GREEN_POWER_TOL {
        return Err(Error::Numerical(format!(
            "μAⁿf = {value} but quadrature gives {quadrature} (n = {n})"
        )));
    }
    Ok(GreenPower {
        value,
        quadrature,
        relative_gap,
    })
}

/// Least-squares slope of `ln y` against `x`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Points of `series` inside `[lo, hi]` that sit above the underflow floor.
/// When fewer than three remain, falls back to the last such points.
fn fit_points(series: &[(f64, f64)], lo: f64, hi: f64) -> (Vec<(f64, f64)>, bool) {
    let in_window: Vec<_> = series
        .iter()
        .copied()
        .filter(|&(x, d)| x >= lo && x <= hi && d > UNDERFLOW_FLOOR)
        .collect();
    if in_window.len() >= 3 {
        return (in_window, false);
    }
    let above: Vec<_> = series
        .iter()
        .copied()
        .filter(|&(_, d)| d > UNDERFLOW_FLOOR)
        .collect();
    let keep = above.len().min(3);
    (above[above.len() - keep..].to_vec(), true)
}

/// Result of comparing an observed decay against a predicted rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// `(n or t, TV distance to α)`.
    pub distances: Vec<(f64, f64)>,
    /// Predicted log-rate per unit of `n` or `t` (negative).
    pub bound_rate: f64,
    /// Fitted log-rate; `None` when the distances sit at the floor throughout.
    pub fitted_rate: Option<f64>,
    /// Abscissae spanned by the fit.
    pub fit_window: Option<(f64, f64)>,
    /// The requested window was mostly below the floor.
    pub reduced_window: bool,
    pub pass: bool,
}

impl DecayReport {
    fn from_series(distances: Vec<(f64, f64)>, bound_rate: f64, lo: f64, hi: f64) -> Self {
        if distances.iter().all(|&(_, d)| d <= DISTANCE_FLOOR) {
            return Self {
                distances,
                bound_rate,
                fitted_rate: None,
                fit_window: None,
                reduced_window: false,
                pass: true,
            };
        }
        let (points, reduced_window) = fit_points(&distances, lo, hi);
        let fitted_rate = fit_log_slope(&points);
        let fit_window = fitted_rate.map(|_| (points[0].0, points[points.len() - 1].0));
        let pass = match fitted_rate {
            Some(rate) => rate <= bound_rate + RATE_SLACK,
            None => points.len() < 2,
        };
        Self {
            distances,
            bound_rate,
            fitted_rate,
            fit_window,
            reduced_window,
            pass,
        }
    }
}

/// Normalized powers of the Green operator against α.
#[derive(Debug, Clone, PartialEq)]
pub struct PowersReport {
    pub decay: DecayReport,
    /// `|λ₀ⁿ μAⁿf − α(f) μ(η)|` for `n = 1..=n_max`.
    pub scaled_errors: Vec<f64>,
}

// λ₀ⁿμAⁿ = μ(η)α + rₙ with rₙ in the complementary invariant subspace.
// Iterating rₙ directly keeps the distance to α accurate far below the
// rounding level of the normalized measure itself.
fn split_off_alpha(mu: &DVector<f64>, s: &SpectralData) -> (f64, DVector<f64>) {
    let weight = mu.dot(&s.eta);
    (weight, mu - &s.alpha * weight)
}

fn project_out_alpha(rest: &mut DVector<f64>, s: &SpectralData) {
    let drift = rest.dot(&s.eta);
    rest.axpy(-drift, &s.alpha, 1.0);
}

/// TV distance of `(wα + r) / (w + r1)` to α.
fn deviation_tv(weight: f64, rest: &DVector<f64>, alpha: &DVector<f64>) -> Result<f64> {
    let rest_mass = rest.sum();
    let mass = weight + rest_mass;
    if !(mass > 0.0) {
        return Err(Error::Numerical("normalizing mass is not positive".into()));
    }
    Ok(0.5
        * rest
            .iter()
            .zip(alpha.iter())
            .map(|(r, a)| (r - rest_mass * a).abs())
            .sum::<f64>()
        / mass)
}

/// TV distance of `μAⁿ / μAⁿ1` to α for `n = 1..=n_max`, with a log-slope
/// fit over `n ∈ [n_max/3, n_max]` compared to `ln(λ₀ / (λ₀ + γ))`.
pub fn verify_powers_bound(
    chain: &AbsorbingChain,
    mu: &DVector<f64>,
    f: &DVector<f64>,
    n_max: usize,
) -> Result<PowersReport> {
    if n_max < 5 {
        return Err(param("n_max", "must be at least 5"));
    }
    let states = chain.n_states();
    super::semigroup::check_probability_vector(mu, states, "mu")?;
    if f.len() != states {
        return Err(param("f", "must have one entry per state"));
    }
    let s = spectral(chain)?;
    let lu = (-chain.q()).transpose().lu();
    let (weight, mut rest) = split_off_alpha(mu, &s);
    let mut distances = Vec::with_capacity(n_max);
    let mut scaled_errors = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        rest = lu.solve(&rest).ok_or(Error::NoAbsorption)? * s.lambda0;
        project_out_alpha(&mut rest, &s);
        distances.push((n as f64, deviation_tv(weight, &rest, &s.alpha)?));
        scaled_errors.push(rest.dot(f).abs());
    }
    let lo = (n_max / 3).max(1) as f64;
    Ok(PowersReport {
        decay: DecayReport::from_series(distances, s.power_ratio().ln(), lo, n_max as f64),
        scaled_errors,
    })
}

/// Time grid reaching `TV ≈ e^{-20}` at the predicted flow rate.
pub fn default_flow_grid(chain: &AbsorbingChain, points: usize) -> Result<Vec<f64>> {
    let s = spectral(chain)?;
    let rate = s.flow_rate();
    let horizon = if rate.is_finite() { 20.0 / rate } else { 1.0 };
    Ok((1..=points)
        .map(|k| horizon * k as f64 / points as f64)
        .collect())
}

pub(crate) fn shifted_green_propagator(a: &DMatrix<f64>) -> Result<Propagator> {
    let top = sorted_eigenvalues(a)?[0].re;
    let n = a.nrows();
    Ok(Propagator::new(&(a - DMatrix::identity(n, n) * top)))
}

/// TV distance of `μ e^{tA} / μ e^{tA} 1` to α on `t_grid`, with a log-slope
/// fit over the second half of the grid compared to `-γ / (λ₀ (λ₀ + γ))`.
pub fn verify_exp_flow_bound(
    chain: &AbsorbingChain,
    mu: &DVector<f64>,
    t_grid: &[f64],
) -> Result<DecayReport> {
    super::semigroup::check_probability_vector(mu, chain.n_states(), "mu")?;
    if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("t_grid", "must be positive and strictly increasing"));
    }
    let s = spectral(chain)?;
    let n = chain.n_states();
    let propagator = Propagator::new(&(green(chain)? - DMatrix::identity(n, n) / s.lambda0));
    let (weight, start) = split_off_alpha(mu, &s);
    let mut rest = start;
    let mut previous = 0.0;
    let mut distances = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        rest = propagator.apply_left(&rest, t - previous);
        project_out_alpha(&mut rest, &s);
        previous = t;
        distances.push((t, deviation_tv(weight, &rest, &s.alpha)?));
    }
    let lo = t_grid[t_grid.len() / 2];
    let hi = t_grid[t_grid.len() - 1];
    Ok(DecayReport::from_series(distances, -s.flow_rate(), lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::normalized;
    use crate::rng::stream;
    use rand::Rng;

    fn e(n: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn two_state_green_powers() {
        let c = AbsorbingChain::two_state_example();
        let ones = DVector::from_element(2, 1.0);
        let g1 = green_power(&c, &e(2, 0), &ones, 1).unwrap();
        assert!((g1.value - 1.0).abs() < 1e-14);
        let g2 = green_power(&c, &e(2, 0), &ones, 2).unwrap();
        assert!((g2.value - 1.0).abs() < 1e-14);
        let f = DVector::from_vec(vec![1.0, 0.0]);
        // A² = [[5/9, 4/9], [4/9, 5/9]]
        let g = green_power(&c, &e(2, 0), &f, 2).unwrap();
        assert!((g.value - 5.0 / 9.0).abs() < 1e-14);
        for n in 1..=5 {
            let g = green_power(&c, &e(2, 1), &f, n).unwrap();
            assert!(g.relative_gap <= 1e-6);
        }
    }

    #[test]
    fn quadrature_identity_on_random_chains() {
        let mut rng = stream(21, 0);
        for _ in 0..10 {
            let n = rng.random_range(2..=8);
            let c = AbsorbingChain::random(n, &mut rng);
            let mu = normalized(&DVector::from_fn(n, |_, _| rng.random::<f64>()));
            let f = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            for k in 1..=5 {
                let g = green_power(&c, &mu, &f, k).unwrap();
                assert!(g.relative_gap <= 1e-6, "n = {k}: {g:?}");
            }
        }
    }

    #[test]
    fn gamma_tail_matches_closed_forms() {
        assert!((gamma_upper_tail(1, 2.0) - (-2.0f64).exp()).abs() < 1e-16);
        assert!((gamma_upper_tail(2, 2.0) - 3.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn qsd_start_has_no_distance() {
        let c = AbsorbingChain::two_state_example();
        let s = spectral(&c).unwrap();
        let r = verify_powers_bound(&c, &s.alpha, &DVector::from_element(2, 1.0), 10).unwrap();
        assert!(r.decay.distances.iter().all(|&(_, d)| d <= 1e-12));
        assert!(r.decay.pass);
        let grid: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let f = verify_exp_flow_bound(&c, &s.alpha, &grid).unwrap();
        assert!(f.distances.iter().all(|&(_, d)| d <= 1e-12));
    }

    #[test]
    fn two_state_rates() {
        let c = AbsorbingChain::two_state_example();
        let mu = e(2, 0);
        let r = verify_powers_bound(&c, &mu, &DVector::from_element(2, 1.0), 30).unwrap();
        assert!((r.decay.bound_rate - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!(r.decay.pass, "{:?}", r.decay);
        // TV(μAⁿ/μAⁿ1, α) = 3⁻ⁿ/2 exactly
        for &(n, d) in r.decay.distances.iter().take(10) {
            assert!((d - 0.5 * 3f64.powf(-n)).abs() < 1e-14);
        }
        let grid = default_flow_grid(&c, 40).unwrap();
        let f = verify_exp_flow_bound(&c, &mu, &grid).unwrap();
        assert!((f.bound_rate + 2.0 / 3.0).abs() < 1e-12);
        assert!(f.pass, "{f:?}");
        assert!((f.fitted_rate.unwrap() + 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_arguments() {
        let c = AbsorbingChain::two_state_example();
        let ones = DVector::from_element(2, 1.0);
        assert!(verify_powers_bound(&c, &e(2, 0), &ones, 4).is_err());
        assert!(verify_exp_flow_bound(&c, &e(2, 0), &[1.0, 0.5]).is_err());
        assert!(green_power(&c, &e(2, 0), &ones, 0).is_err());
    }
}
