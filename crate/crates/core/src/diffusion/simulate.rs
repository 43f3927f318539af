//! Euler–Maruyama paths killed at the boundary of the domain.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DiffusionModel, Domain};
use crate::error::{param, Error, Result};

/// Knobs shared by every path simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Step budget per path before giving up.
    pub max_steps: u64,
    /// Width of the final bisection bracket on the crossing fraction.
    pub refine_tol: f64,
    /// Kill interior-to-interior steps with the Brownian-bridge crossing
    /// probability `exp(-2 d0 d1 / (s² dt))`.
    pub bridge_correction: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            max_steps: 1_000_000_000,
            refine_tol: 1e-9,
            bridge_correction: false,
        }
    }
}

/// Outcome of a single step with respect to the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    Interior,
    /// Fraction of the step, in (0, 1], at which the boundary was crossed.
    Hit(f64),
}

/// Path stored up to (but excluding) its exit point.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbedPath {
    dim: usize,
    coords: Vec<f64>,
    pub dt: f64,
    pub absorption_time: f64,
    pub hit_fraction: f64,
}

impl AbsorbedPath {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }
}

/// Summary of a visited path: `stored_states` states were passed to the
/// visitor, the last with weight `hit_fraction * dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    pub stored_states: u64,
    pub hit_fraction: f64,
    pub absorption_time: f64,
}

struct Stepper {
    dim: usize,
    noise_dim: usize,
    drift: Vec<f64>,
    sigma: Vec<f64>,
}

impl Stepper {
    fn new<M: DiffusionModel + ?Sized>(model: &M) -> Self {
        let dim = model.dim();
        let noise_dim = model.noise_dim();
        Self {
            dim,
            noise_dim,
            drift: vec![0.0; dim],
            sigma: vec![0.0; dim * noise_dim],
        }
    }

    fn step<M: DiffusionModel + ?Sized>(
        &mut self,
        model: &M,
        x: &[f64],
        dt: f64,
        z: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        model.drift(x, &mut self.drift);
        model.diffusion(x, &mut self.sigma);
        if !self.drift.iter().chain(&self.sigma).all(|v| v.is_finite()) {
            return Err(Error::ModelEvaluation { point: x.to_vec() });
        }
        let sqrt_dt = dt.sqrt();
        for i in 0..self.dim {
            let row = &self.sigma[i * self.noise_dim..(i + 1) * self.noise_dim];
            let noise: f64 = row.iter().zip(z).map(|(s, zj)| s * zj).sum();
            out[i] = x[i] + self.drift[i] * dt + noise * sqrt_dt;
        }
        Ok(())
    }

    /// Mean per-coordinate variance rate, trace(σσᵀ)/dim, at the last evaluated point.
    fn scalar_variance(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum::<f64>() / self.dim as f64
    }
}

/// One explicit Euler–Maruyama step `x + b(x) dt + σ(x) z √dt`.
pub fn euler_step<M: DiffusionModel + ?Sized>(
    model: &M,
    x: &[f64],
    dt: f64,
    z: &[f64],
) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(param("dt", "must be positive and finite"));
    }
    if x.len() != model.dim() || z.len() != model.noise_dim() {
        return Err(param("x", "dimension does not match the model"));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Precondition(format!("point {x:?} is not finite")));
    }
    let mut out = vec![0.0; x.len()];
    Stepper::new(model).step(model, x, dt, z, &mut out)?;
    Ok(out)
}

fn bisect_crossing<D: Domain + ?Sized>(
    domain: &D,
    x_prev: &[f64],
    x_next: &[f64],
    refine_tol: f64,
    scratch: &mut [f64],
) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > refine_tol {
        let mid = 0.5 * (lo + hi);
        for ((s, a), b) in scratch.iter_mut().zip(x_prev).zip(x_next) {
            *s = a + mid * (b - a);
        }
        if domain.contains(scratch) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Classifies the step `x_prev → x_next`, bisecting the crossing fraction
/// when `x_next` has left the domain.
pub fn detect_absorption<D: Domain + ?Sized>(
    domain: &D,
    x_prev: &[f64],
    x_next: &[f64],
    refine_tol: f64,
) -> Result<Crossing> {
    if !(refine_tol > 0.0) {
        return Err(param("refine_tol", "must be positive"));
    }
    if !domain.contains(x_prev) {
        return Err(Error::Precondition(format!(
            "{x_prev:?} is not inside the domain"
        )));
    }
    if domain.contains(x_next) {
        return Ok(Crossing::Interior);
    }
    let mut scratch = vec![0.0; x_prev.len()];
    Ok(Crossing::Hit(bisect_crossing(
        domain,
        x_prev,
        x_next,
        refine_tol,
        &mut scratch,
    )))
}

fn check_setup<M, D>(model: &M, domain: &D, x0: &[f64], dt: f64, opts: &SimOptions) -> Result<()>
where
    M: DiffusionModel + ?Sized,
    D: Domain + ?Sized,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(param("dt", "must be positive and finite"));
    }
    if !(opts.refine_tol > 0.0) {
        return Err(param("refine_tol", "must be positive"));
    }
    if model.dim() == 0 || model.noise_dim() == 0 {
        return Err(param("model", "dim and noise_dim must be at least 1"));
    }
    if model.dim() != domain.dim() || x0.len() != model.dim() {
        return Err(param(
            "x0",
            "model, domain and start point dimensions differ",
        ));
    }
    if !domain.contains(x0) {
        return Err(Error::Precondition(format!(
            "start {x0:?} is not inside the domain"
        )));
    }
    Ok(())
}

/// Runs one killed path from `x0`, handing every stored state and its
/// occupation weight to `visit` in order. All states but the last carry
/// weight `dt`; the last carries `hit_fraction * dt`.
pub fn visit_path<M, D, R, V>(
    model: &M,
    domain: &D,
    x0: &[f64],
    dt: f64,
    rng: &mut R,
    opts: &SimOptions,
    mut visit: V,
) -> Result<PathSummary>
where
    M: DiffusionModel + ?Sized,
    D: Domain + ?Sized,
    R: Rng + ?Sized,
    V: FnMut(&[f64], f64),
{
    check_setup(model, domain, x0, dt, opts)?;
    let mut stepper = Stepper::new(model);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; x.len()];
    let mut z = vec![0.0; model.noise_dim()];
    let mut stored: u64 = 0;
    loop {
        if stored >= opts.max_steps {
            return Err(Error::RunawayPath {
                max_steps: opts.max_steps,
            });
        }
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        stepper.step(model, &x, dt, &z, &mut next)?;
        stored += 1;
        let fraction = if domain.contains(&next) {
            if opts.bridge_correction && bridge_killed(domain, &stepper, &x, &next, dt, rng) {
                Some(0.5)
            } else {
                None
            }
        } else {
            // `next` doubles as scratch once the crossing is bracketed.
            let end = next.clone();
            Some(bisect_crossing(
                domain,
                &x,
                &end,
                opts.refine_tol,
                &mut next,
            ))
        };
        match fraction {
            None => {
                visit(&x, dt);
                std::mem::swap(&mut x, &mut next);
            }
            Some(f) => {
                visit(&x, f * dt);
                return Ok(PathSummary {
                    stored_states: stored,
                    hit_fraction: f,
                    absorption_time: (stored - 1) as f64 * dt + f * dt,
                });
            }
        }
    }
}

fn bridge_killed<D, R>(
    domain: &D,
    stepper: &Stepper,
    x: &[f64],
    next: &[f64],
    dt: f64,
    rng: &mut R,
) -> bool
where
    D: Domain + ?Sized,
    R: Rng + ?Sized,
{
    let variance = stepper.scalar_variance();
    if variance <= 0.0 {
        return false;
    }
    let d0 = domain.boundary_distance(x);
    let d1 = domain.boundary_distance(next);
    let p = (-2.0 * d0 * d1 / (variance * dt)).exp();
    rng.random::<f64>() < p
}

/// Simulates from `x0` until the first exit from the domain.
pub fn simulate_until_absorption<M, D, R>(
    model: &M,
    domain: &D,
    x0: &[f64],
    dt: f64,
    rng: &mut R,
    opts: &SimOptions,
) -> Result<AbsorbedPath>
where
    M: DiffusionModel + ?Sized,
    D: Domain + ?Sized,
    R: Rng + ?Sized,
{
    let mut coords = Vec::new();
    let summary = visit_path(model, domain, x0, dt, rng, opts, |x, _| {
        coords.extend_from_slice(x)
    })?;
    Ok(AbsorbedPath {
        dim: x0.len(),
        coords,
        dt,
        absorption_time: summary.absorption_time,
        hit_fraction: summary.hit_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{BoxDomain, BrownianMotion, ConstantDrift, PolynomialModel};
    use crate::rng::stream;

    fn zero_model() -> PolynomialModel {
        PolynomialModel::new(vec![vec![0.0]], vec![vec![0.0]]).unwrap()
    }

    #[test]
    fn euler_step_examples() {
        assert_eq!(
            euler_step(&zero_model(), &[0.3], 0.5, &[2.0]).unwrap(),
            vec![0.3]
        );
        let x = euler_step(&BrownianMotion::new(1), &[0.5], 0.01, &[1.0]).unwrap();
        assert!((x[0] - 0.6).abs() < 1e-15);
        let decay = PolynomialModel::new(vec![vec![0.0, -1.0]], vec![vec![0.0]]).unwrap();
        let x = euler_step(&decay, &[1.0], 0.1, &[0.0]).unwrap();
        assert!((x[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn euler_step_reports_non_finite_coefficients() {
        let blowup = PolynomialModel::new(vec![vec![f64::INFINITY]], vec![vec![1.0]]).unwrap();
        match euler_step(&blowup, &[0.25], 0.1, &[0.0]) {
            Err(Error::ModelEvaluation { point }) => assert_eq!(point, vec![0.25]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(euler_step(&zero_model(), &[0.3], 0.0, &[0.0]).is_err());
    }

    #[test]
    fn detect_absorption_examples() {
        let d = BoxDomain::unit_interval();
        assert_eq!(
            detect_absorption(&d, &[0.5], &[0.6], 1e-6).unwrap(),
            Crossing::Interior
        );
        for (prev, next) in [(0.5, -0.5), (0.9, 1.1)] {
            match detect_absorption(&d, &[prev], &[next], 1e-6).unwrap() {
                Crossing::Hit(f) => assert!((f - 0.5).abs() <= 1e-6, "{f}"),
                Crossing::Interior => panic!("missed crossing"),
            }
        }
        assert!(matches!(
            detect_absorption(&d, &[0.5], &[2.0], 0.0),
            Err(Error::Parameter {
                name: "refine_tol",
                ..
            })
        ));
        assert!(matches!(
            detect_absorption(&d, &[1.5], &[2.0], 1e-6),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn deterministic_exit_time() {
        let d = BoxDomain::unit_interval();
        let m = ConstantDrift::new(vec![1.0], 0.0);
        let dt = 1e-3;
        let path = simulate_until_absorption(
            &m,
            &d,
            &[0.7],
            dt,
            &mut stream(0, 0),
            &SimOptions::default(),
        )
        .unwrap();
        assert!((path.absorption_time - 0.3).abs() <= dt);
    }

    #[test]
    fn near_boundary_start_is_allowed() {
        let d = BoxDomain::unit_interval();
        let m = BrownianMotion::new(1);
        for seed in 0..20 {
            let path = simulate_until_absorption(
                &m,
                &d,
                &[0.999],
                1e-4,
                &mut stream(seed, 0),
                &SimOptions::default(),
            )
            .unwrap();
            assert!(path.absorption_time > 0.0);
            assert!(path.states().all(|s| s[0] > 0.0 && s[0] < 1.0));
        }
    }

    #[test]
    fn time_bookkeeping_and_determinism() {
        let d = BoxDomain::unit_interval();
        let m = BrownianMotion::new(1);
        let opts = SimOptions::default();
        let a = simulate_until_absorption(&m, &d, &[0.3], 1e-3, &mut stream(5, 1), &opts).unwrap();
        let b = simulate_until_absorption(&m, &d, &[0.3], 1e-3, &mut stream(5, 1), &opts).unwrap();
        assert_eq!(a, b);
        let expected = (a.len() - 1) as f64 * a.dt + a.hit_fraction * a.dt;
        assert!((a.absorption_time - expected).abs() <= 1e-12 * expected);
        assert!(a.hit_fraction > 0.0 && a.hit_fraction <= 1.0);
    }

    #[test]
    fn runaway_paths_are_reported() {
        let d = BoxDomain::unit_interval();
        let opts = SimOptions {
            max_steps: 10,
            ..SimOptions::default()
        };
        let r =
            simulate_until_absorption(&zero_model(), &d, &[0.5], 1e-3, &mut stream(0, 0), &opts);
        assert_eq!(r, Err(Error::RunawayPath { max_steps: 10 }));
    }

    #[test]
    fn bridge_correction_shortens_exit_times() {
        let d = BoxDomain::unit_interval();
        let m = BrownianMotion::new(1);
        let dt = 1e-3;
        let mean = |bridge: bool| {
            let opts = SimOptions {
                bridge_correction: bridge,
                ..SimOptions::default()
            };
            (0..4000u64)
                .map(|i| {
                    simulate_until_absorption(&m, &d, &[0.5], dt, &mut stream(11, i), &opts)
                        .unwrap()
                        .absorption_time
                })
                .sum::<f64>()
                / 4000.0
        };
        let plain = mean(false);
        let bridged = mean(true);
        assert!(bridged < plain);
        assert!((bridged - 0.25).abs() < (plain - 0.25).abs());
    }
}
