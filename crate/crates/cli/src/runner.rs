//! Executes a validated [`ExperimentConfig`] and writes its CSV artifacts.
//!
//! Output is a pure function of the config: replica `i` draws from the
//! ChaCha stream `(master_seed, i)`, rows are written in a fixed order and
//! floats use Rust's shortest round-trip formatting.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use qsd_core::benchmarks::{fd_eigensolver, FdGeometry, ReferenceQSD};
use qsd_core::diffusion::{BrownianMotion, Domain};
use qsd_core::green_lab::{
    apt_check, apt_clock, check_a1_a2, default_flow_grid, eta_sequence, flow_field, flow_ode,
    green, green_power, reinforced_chain, spectral, verify_exp_flow_bound, verify_powers_bound,
    window_starts, AbsorbingChain, RATE_SLACK,
};
use qsd_core::linalg::tv_distance;
use qsd_core::reinforced::{
    lambda0_estimate, run_reinforced, OccupationMeasure, Points, ReinforcedTrace,
};
use qsd_core::rng::stream;
use rand::Rng;
use rayon::prelude::*;

use crate::chain_file::read_chain;
use crate::config::{Command, ExperimentConfig};

pub const SCHEMA_VERSION: &str = "1";
pub const HISTOGRAM_BINS: usize = 50;
/// Longest finite-lab run that still gets the pseudo-trajectory report;
/// the check keeps every η_n in memory.
pub const APT_MAX_CYCLES: usize = 1_000_000;
pub const APT_WINDOW: f64 = 1.0;
pub const APT_WINDOWS: usize = 40;

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// `(replica, message)` for replicas that did not complete.
    pub failures: Vec<(usize, String)>,
}

impl RunOutcome {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs the experiment on a pool of `jobs` threads (`None`: all cores).
pub fn run_experiment(config: &ExperimentConfig, jobs: Option<usize>) -> Result<RunOutcome> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("creating output directory {}", config.output_dir.display()))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().context("building the worker pool")?;
    pool.install(|| match config.command {
        Command::Simulate => simulate(config),
        Command::FiniteLab => finite_lab(config),
        Command::Verify => verify(config),
        Command::Benchmark => benchmark(config),
    })
}

/// Shortest round-trip text; exponent form outside `[1e-4, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut full = vec!["schema_version"];
    full.extend_from_slice(header);
    w.write_record(&full)?;
    for row in rows {
        w.write_record(std::iter::once(SCHEMA_VERSION).chain(row.iter().map(String::as_str)))?;
    }
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `[quantity, replicas, median, q1, q3, iqr]` over the finite values.
pub fn summary_row(quantity: &str, values: &[f64]) -> Vec<String> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return vec![
            quantity.into(),
            "0".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ];
    }
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    vec![
        quantity.into(),
        v.len().to_string(),
        num(median),
        num(q1),
        num(q3),
        num(q3 - q1),
    ]
}

const SUMMARY_HEADER: [&str; 6] = ["quantity", "replicas", "median", "q1", "q3", "iqr"];
const REPORT_HEADER: [&str; 5] = ["quantity", "index", "value", "bound", "pass"];
const REPLICAS_HEADER: [&str; 7] = [
    "replica",
    "master_seed",
    "stream",
    "status",
    "lambda0_estimate",
    "final_distance",
    "error",
];

fn report_row(
    quantity: &str,
    index: Option<usize>,
    value: f64,
    bound: Option<f64>,
    pass: Option<bool>,
) -> Vec<String> {
    vec![
        quantity.into(),
        index.map(|i| i.to_string()).unwrap_or_default(),
        num(value),
        opt(bound),
        pass.map(|p| p.to_string()).unwrap_or_default(),
    ]
}

struct ReplicaResult {
    lambda0: Option<f64>,
    final_distance: Option<f64>,
    files: Vec<PathBuf>,
}

fn collect_replicas(
    config: &ExperimentConfig,
    results: Vec<Result<ReplicaResult>>,
    distance_name: &str,
) -> Result<RunOutcome> {
    let mut files = Vec::new();
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let mut lambdas = Vec::new();
    let mut distances = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let mut row = vec![i.to_string(), config.master_seed.to_string(), i.to_string()];
        match r {
            Ok(r) => {
                row.extend([
                    "ok".into(),
                    opt(r.lambda0),
                    opt(r.final_distance),
                    String::new(),
                ]);
                lambdas.extend(r.lambda0);
                distances.extend(r.final_distance);
                files.extend(r.files);
            }
            Err(e) => {
                let message = format!("{e:#}");
                row.extend([
                    "error".into(),
                    String::new(),
                    String::new(),
                    message.clone(),
                ]);
                failures.push((i, message));
            }
        }
        rows.push(row);
    }
    let replicas = config.output_dir.join("replicas.csv");
    write_csv(&replicas, &REPLICAS_HEADER, &rows)?;
    let summary = config.output_dir.join("summary.csv");
    write_csv(
        &summary,
        &SUMMARY_HEADER,
        &[
            summary_row("lambda0_estimate", &lambdas),
            summary_row(distance_name, &distances),
        ],
    )?;
    files.push(replicas);
    files.push(summary);
    Ok(RunOutcome { files, failures })
}

fn histogram(values: impl Iterator<Item = (f64, f64)>, lo: f64, hi: f64) -> Vec<f64> {
    let mut bins = vec![0.0; HISTOGRAM_BINS];
    let mut total = 0.0;
    for (y, w) in values {
        let k = (((y - lo) / (hi - lo)) * HISTOGRAM_BINS as f64).floor();
        bins[(k.max(0.0) as usize).min(HISTOGRAM_BINS - 1)] += w;
        total += w;
    }
    if total > 0.0 {
        bins.iter_mut().for_each(|b| *b /= total);
    }
    bins
}

fn simulate(config: &ExperimentConfig) -> Result<RunOutcome> {
    let spec = config.model.as_ref().context("simulate needs a model")?;
    let model = spec.build_model()?;
    let domain: Box<dyn Domain> = match &config.domain {
        Some(d) => d.build()?,
        None => spec
            .default_domain()
            .context("model has no default domain")?,
    };
    let x0 = config.x0.clone().unwrap_or_else(|| domain.interior_point());
    let reference = config.reference_qsd();
    let diagnostics = config.diagnostics_config();
    let (lo, hi) = match &reference {
        Some(r) => r.support(),
        None => {
            let b = domain.bounding_box();
            (b.lower[0], b.upper[0])
        }
    };
    let project = |x: &[f64]| reference.as_ref().map_or(x[0], |r| r.coordinate(x));

    let results: Vec<Result<ReplicaResult>> = (0..config.replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.master_seed, i as u64);
            let start = match &config.x0_box {
                Some((lower, upper)) => lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| rng.random_range(*l..*u))
                    .collect(),
                None => x0.clone(),
            };
            let trace = run_reinforced(
                &model,
                &domain,
                &start,
                config.dt,
                config.n_cycles,
                &mut rng,
                &diagnostics,
            )?;
            let rows: Vec<Vec<String>> = trace
                .snapshots
                .iter()
                .map(|s| {
                    vec![
                        i.to_string(),
                        s.cycle.to_string(),
                        num(s.theta),
                        num(s.theta_ratio),
                        num(s.lambda0_estimate),
                        opt(s.ks_to_reference),
                        opt(s.boundary_layer_mass),
                    ]
                })
                .collect();
            let path = config.output_dir.join(format!("replica_{i:03}.csv"));
            write_csv(
                &path,
                &[
                    "replica",
                    "cycle",
                    "theta",
                    "theta_ratio",
                    "lambda0_estimate",
                    "ks_to_reference",
                    "boundary_layer_mass",
                ],
                &rows,
            )?;
            let hist_path = config.output_dir.join(format!("replica_{i:03}_hist.csv"));
            write_histograms(&hist_path, i, &trace, &project, lo, hi)?;
            let last = trace.snapshots.last();
            Ok(ReplicaResult {
                lambda0: lambda0_estimate(&trace),
                final_distance: last.and_then(|s| s.ks_to_reference),
                files: vec![path, hist_path],
            })
        })
        .collect();
    collect_replicas(config, results, "final_ks")
}

fn write_histograms(
    path: &Path,
    replica: usize,
    trace: &ReinforcedTrace<Points>,
    project: &dyn Fn(&[f64]) -> f64,
    lo: f64,
    hi: f64,
) -> Result<()> {
    let occupation: &OccupationMeasure<Points> = &trace.occupation;
    let mu = histogram(occupation.iter().map(|(x, w)| (project(x), w)), lo, hi);
    let eta = histogram(
        trace.resample_points.iter().map(|z| (project(z), 1.0)),
        lo,
        hi,
    );
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut rows = Vec::with_capacity(2 * HISTOGRAM_BINS);
    for (name, bins) in [("mu", &mu), ("eta", &eta)] {
        for (k, mass) in bins.iter().enumerate() {
            rows.push(vec![
                replica.to_string(),
                name.into(),
                k.to_string(),
                num(lo + k as f64 * width),
                num(lo + (k + 1) as f64 * width),
                num(*mass),
            ]);
        }
    }
    write_csv(
        path,
        &["replica", "measure", "bin", "bin_left", "bin_right", "mass"],
        &rows,
    )
}

fn finite_lab(config: &ExperimentConfig) -> Result<RunOutcome> {
    let file = read_chain(
        config
            .chain
            .as_deref()
            .context("finite-lab needs a chain file")?,
    )?;
    let n = file.chain.n_states();
    let alpha = spectral(&file.chain).ok().map(|s| s.alpha);
    let results: Vec<Result<ReplicaResult>> = (0..config.replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.master_seed, i as u64);
            let trace = reinforced_chain(&file.chain, file.start, config.n_cycles, &mut rng)?;
            let etas = eta_sequence(&trace, n);
            let rows: Vec<Vec<String>> = trace
                .snapshots
                .iter()
                .map(|s| {
                    let tv = alpha.as_ref().map(|a| tv_distance(&etas[s.cycle - 1], a));
                    vec![
                        i.to_string(),
                        s.cycle.to_string(),
                        num(s.theta),
                        num(s.theta_ratio),
                        num(s.lambda0_estimate),
                        opt(tv),
                    ]
                })
                .collect();
            let path = config.output_dir.join(format!("finite_lab_{i:03}.csv"));
            write_csv(
                &path,
                &[
                    "replica",
                    "cycle",
                    "theta",
                    "theta_ratio",
                    "lambda0_estimate",
                    "tv_to_alpha",
                ],
                &rows,
            )?;

            let eta = etas.last().cloned().unwrap_or_else(|| DVector::zeros(n));
            let total = trace.occupation.total_time();
            let mut mu = DVector::zeros(n);
            for (&state, w) in trace.occupation.iter() {
                mu[state] += w / total;
            }
            let measure_rows: Vec<Vec<String>> = (0..n)
                .map(|s| {
                    vec![
                        i.to_string(),
                        s.to_string(),
                        num(eta[s]),
                        num(mu[s]),
                        opt(alpha.as_ref().map(|a| a[s])),
                    ]
                })
                .collect();
            let measures = config
                .output_dir
                .join(format!("finite_lab_{i:03}_measures.csv"));
            write_csv(
                &measures,
                &["replica", "state", "eta", "mu", "alpha"],
                &measure_rows,
            )?;
            let mut files = vec![path, measures];

            if config.n_cycles <= APT_MAX_CYCLES && alpha.is_some() {
                let h = green(&file.chain)? * DVector::from_element(n, 1.0);
                let end = *apt_clock(&etas, &h).last().expect("at least one cycle");
                if end > APT_WINDOW {
                    let starts = window_starts(end, APT_WINDOW, APT_WINDOWS);
                    let report = apt_check(&trace, &file.chain, APT_WINDOW, &starts)?;
                    let apt_rows: Vec<Vec<String>> = report
                        .window_starts
                        .iter()
                        .zip(&report.sup_distances)
                        .map(|(t, d)| vec![i.to_string(), num(*t), num(APT_WINDOW), num(*d)])
                        .collect();
                    let apt = config.output_dir.join(format!("finite_lab_{i:03}_apt.csv"));
                    write_csv(
                        &apt,
                        &["replica", "window_start", "window", "sup_tv"],
                        &apt_rows,
                    )?;
                    files.push(apt);
                }
            }
            Ok(ReplicaResult {
                lambda0: lambda0_estimate(&trace),
                final_distance: alpha.as_ref().map(|a| tv_distance(&eta, a)),
                files,
            })
        })
        .collect();
    collect_replicas(config, results, "final_tv_to_alpha")
}

/// Green-identity, condition, decay-rate and flow checks on one chain.
pub fn verify_rows(
    chain: &AbsorbingChain,
    mu: &DVector<f64>,
    n_max: usize,
    t_max: Option<f64>,
) -> Result<VerifyReport> {
    let n = chain.n_states();
    let s = spectral(chain)?;
    let a = green(chain)?;
    let ones = DVector::from_element(n, 1.0);
    let mut rows = Vec::new();

    let inverse = (&a * (-chain.q()) - DMatrix::identity(n, n)).amax();
    rows.push(report_row(
        "green_inverse_residual",
        None,
        inverse,
        Some(1e-10),
        Some(inverse <= 1e-10),
    ));
    let eigen = (a.tr_mul(&s.alpha).dot(&ones) * s.lambda0 - 1.0).abs();
    rows.push(report_row(
        "green_alpha_identity",
        None,
        eigen,
        Some(1e-10),
        Some(eigen <= 1e-10),
    ));

    let conditions = check_a1_a2(chain, 1.0)?;
    rows.push(report_row(
        "condition_a1_c1",
        None,
        conditions.c1,
        Some(0.0),
        Some(conditions.c1 > 0.0),
    ));
    let c2 = conditions.c2.unwrap_or(0.0);
    rows.push(report_row(
        "condition_a2_c2",
        None,
        c2,
        Some(0.0),
        Some(c2 > 0.0),
    ));

    let powers = verify_powers_bound(chain, mu, &ones, n_max)?;
    rows.push(report_row(
        "power_decay_rate",
        None,
        powers.decay.fitted_rate.unwrap_or(f64::NEG_INFINITY),
        Some(powers.decay.bound_rate + RATE_SLACK),
        Some(powers.decay.pass),
    ));
    let grid = match t_max {
        Some(t) => (1..=200).map(|k| t * k as f64 / 200.0).collect(),
        None => default_flow_grid(chain, 200)?,
    };
    let flow = verify_exp_flow_bound(chain, mu, &grid)?;
    rows.push(report_row(
        "flow_decay_rate",
        None,
        flow.fitted_rate.unwrap_or(f64::NEG_INFINITY),
        Some(flow.bound_rate + RATE_SLACK),
        Some(flow.pass),
    ));
    for k in 1..=5 {
        let g = green_power(chain, mu, &ones, k)?;
        rows.push(report_row(
            "green_power_quadrature_gap",
            Some(k),
            g.relative_gap,
            Some(1e-6),
            Some(g.relative_gap <= 1e-6),
        ));
    }
    let horizon = t_max.unwrap_or(10.0 / s.lambda0);
    let trajectory = flow_ode(chain, mu, horizon, 1e-10)?;
    let tv = trajectory.max_tv_to_closed_form;
    rows.push(report_row(
        "flow_ode_max_tv",
        None,
        tv,
        Some(1e-8),
        Some(tv <= 1e-8),
    ));
    let field = flow_field(&a, &s.alpha).amax();
    rows.push(report_row(
        "flow_field_at_alpha",
        None,
        field,
        Some(1e-12),
        Some(field <= 1e-12),
    ));

    Ok(VerifyReport {
        rows,
        powers: powers.decay.distances,
        flow: flow.distances,
        lambda0: s.lambda0,
        gamma: s.gamma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    /// `[quantity, index, value, bound, pass]`.
    pub rows: Vec<Vec<String>>,
    pub powers: Vec<(f64, f64)>,
    pub flow: Vec<(f64, f64)>,
    pub lambda0: f64,
    pub gamma: f64,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r[4] == "true")
    }
}

fn verify(config: &ExperimentConfig) -> Result<RunOutcome> {
    let file = read_chain(
        config
            .chain
            .as_deref()
            .context("verify needs a chain file")?,
    )?;
    let report = verify_rows(&file.chain, &file.mu, config.n_max, config.t_max)?;
    let dir = &config.output_dir;
    let mut rows = report.rows.clone();
    rows.insert(0, report_row("lambda0", None, report.lambda0, None, None));
    rows.insert(1, report_row("gamma", None, report.gamma, None, None));
    let main = dir.join("report.csv");
    write_csv(&main, &REPORT_HEADER, &rows)?;
    let powers = dir.join("verify_powers.csv");
    write_csv(
        &powers,
        &["n", "tv_to_alpha"],
        &report
            .powers
            .iter()
            .map(|(n, d)| vec![num(*n), num(*d)])
            .collect::<Vec<_>>(),
    )?;
    let flow = dir.join("verify_flow.csv");
    write_csv(
        &flow,
        &["t", "tv_to_alpha"],
        &report
            .flow
            .iter()
            .map(|(t, d)| vec![num(*t), num(*d)])
            .collect::<Vec<_>>(),
    )?;
    // a failed check is a finding, not a failed run
    let failed = report.rows.iter().filter(|r| r[4] != "true").count();
    if failed > 0 {
        eprintln!(
            "{failed} of {} checks failed; see {}",
            report.rows.len(),
            main.display()
        );
    }
    Ok(RunOutcome {
        files: vec![main, powers, flow],
        failures: Vec::new(),
    })
}

fn benchmark(config: &ExperimentConfig) -> Result<RunOutcome> {
    let name = config.reference.as_deref().unwrap_or_default();
    let Some(reference) = ReferenceQSD::by_name(name) else {
        bail!("unknown reference `{name}`");
    };
    let (model, geometry) = match name {
        "bm-interval" => (
            BrownianMotion::new(1),
            FdGeometry::Interval {
                lower: 0.0,
                upper: 1.0,
            },
        ),
        _ => (BrownianMotion::new(2), FdGeometry::Disk { radius: 1.0 }),
    };
    let fd = fd_eigensolver(&model, geometry, config.grid)?;
    let dir = &config.output_dir;

    let table = dir.join(format!("benchmark_{name}.csv"));
    write_csv(
        &table,
        &["x", "density", "cdf"],
        &reference
            .table(config.grid + 2)
            .into_iter()
            .map(|(x, d, c)| vec![num(x), num(d), num(c)])
            .collect::<Vec<_>>(),
    )?;
    let fd_path = dir.join(format!("benchmark_{name}_fd.csv"));
    write_csv(
        &fd_path,
        &["node", "fd_density", "reference_density"],
        &fd.nodes
            .iter()
            .zip(&fd.density)
            .map(|(&x, &d)| vec![num(x), num(d), num(reference.density(x))])
            .collect::<Vec<_>>(),
    )?;
    let node_error = fd
        .nodes
        .iter()
        .zip(&fd.density)
        .map(|(&x, &d)| (d - reference.density(x)).abs())
        .fold(0.0, f64::max);
    let relative = (fd.lambda0 - reference.lambda0).abs() / reference.lambda0;
    let report = dir.join(format!("benchmark_{name}_report.csv"));
    write_csv(
        &report,
        &REPORT_HEADER,
        &[
            report_row("lambda0_reference", None, reference.lambda0, None, None),
            report_row("lambda0_fd", None, fd.lambda0, None, None),
            report_row("lambda0_relative_error", None, relative, None, None),
            report_row("density_max_node_error", None, node_error, None, None),
        ],
    )?;
    Ok(RunOutcome {
        files: vec![table, fd_path, report],
        failures: Vec::new(),
    })
}
