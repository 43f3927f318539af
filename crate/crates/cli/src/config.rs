//! Experiment configuration: a strict TOML schema.
//!
//! Every key is checked against the schema for the chosen command; unknown
//! keys, out-of-range values and missing required keys are reported with
//! the key path and the line it appears on.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use qsd_core::benchmarks::{ReferenceQSD, REFERENCE_NAMES};
use qsd_core::diffusion::{Ball, BoxDomain, Domain, ModelSpec, SimOptions};
use qsd_core::reinforced::DiagnosticsConfig;
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    FiniteLab,
    Verify,
    Benchmark,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::FiniteLab => "finite-lab",
            Command::Verify => "verify",
            Command::Benchmark => "benchmark",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        [
            Command::Simulate,
            Command::FiniteLab,
            Command::Verify,
            Command::Benchmark,
        ]
        .into_iter()
        .find(|c| c.name() == name)
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Simulate => &[
                "command",
                "model",
                "domain",
                "x0",
                "x0_box",
                "dt",
                "n_cycles",
                "replicas",
                "master_seed",
                "output_dir",
                "reference",
                "diagnostics",
                "numerics",
            ],
            Command::FiniteLab => &[
                "command",
                "chain",
                "n_cycles",
                "replicas",
                "master_seed",
                "output_dir",
            ],
            Command::Verify => &["command", "chain", "n_max", "t_max", "output_dir"],
            Command::Benchmark => &["command", "reference", "grid", "output_dir"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Interval { lower: f64, upper: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl DomainSpec {
    pub fn build(&self) -> qsd_core::Result<Box<dyn Domain>> {
        Ok(match self {
            DomainSpec::Interval { lower, upper } => Box::new(BoxDomain::interval(*lower, *upper)?),
            DomainSpec::Box { lower, upper } => {
                Box::new(BoxDomain::new(lower.clone(), upper.clone())?)
            }
            DomainSpec::Ball { center, radius } => Box::new(Ball::new(center.clone(), *radius)?),
        })
    }

    fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Box { lower, .. } => lower.len(),
            DomainSpec::Ball { center, .. } => center.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub eta_boundary: f64,
    pub snapshot_base: usize,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            eta_boundary: 0.05,
            snapshot_base: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub thinning: usize,
    pub max_steps: u64,
    pub refine_tol: f64,
    pub bridge_correction: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        let sim = SimOptions::default();
        Self {
            thinning: 1,
            max_steps: sim.max_steps,
            refine_tol: sim.refine_tol,
            bridge_correction: sim.bridge_correction,
        }
    }
}

/// A validated experiment. Fields a command does not use stay at their
/// defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: Option<ModelSpec>,
    pub domain: Option<DomainSpec>,
    pub x0: Option<Vec<f64>>,
    /// Start each replica uniformly in this box instead of at `x0`.
    pub x0_box: Option<(Vec<f64>, Vec<f64>)>,
    pub dt: f64,
    pub n_cycles: usize,
    pub replicas: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub reference: Option<String>,
    pub diagnostics: Diagnostics,
    pub numerics: Numerics,
    pub chain: Option<PathBuf>,
    pub n_max: usize,
    pub t_max: Option<f64>,
    pub grid: usize,
}

pub const DEFAULT_N_MAX: usize = 30;

impl ExperimentConfig {
    fn empty(command: Command) -> Self {
        Self {
            command,
            model: None,
            domain: None,
            x0: None,
            x0_box: None,
            dt: 0.0,
            n_cycles: 0,
            replicas: 1,
            master_seed: 0,
            output_dir: PathBuf::from("."),
            reference: None,
            diagnostics: Diagnostics::default(),
            numerics: Numerics::default(),
            chain: None,
            n_max: DEFAULT_N_MAX,
            t_max: None,
            grid: 0,
        }
    }

    pub fn finite_lab(
        chain: PathBuf,
        n_cycles: usize,
        replicas: usize,
        master_seed: u64,
        output_dir: PathBuf,
    ) -> Self {
        Self {
            chain: Some(chain),
            n_cycles,
            replicas,
            master_seed,
            output_dir,
            ..Self::empty(Command::FiniteLab)
        }
    }

    pub fn verify(chain: PathBuf, n_max: usize, t_max: Option<f64>, output_dir: PathBuf) -> Self {
        Self {
            chain: Some(chain),
            n_max,
            t_max,
            output_dir,
            ..Self::empty(Command::Verify)
        }
    }

    pub fn benchmark(reference: &str, grid: usize, output_dir: PathBuf) -> Self {
        Self {
            reference: Some(reference.to_string()),
            grid,
            output_dir,
            ..Self::empty(Command::Benchmark)
        }
    }

    pub fn reference_qsd(&self) -> Option<ReferenceQSD> {
        self.reference.as_deref().and_then(ReferenceQSD::by_name)
    }

    pub fn diagnostics_config(&self) -> DiagnosticsConfig {
        DiagnosticsConfig {
            eta_boundary: Some(self.diagnostics.eta_boundary),
            snapshot_base: self.diagnostics.snapshot_base,
            thinning: self.numerics.thinning,
            reference: self.reference_qsd(),
            sim: SimOptions {
                max_steps: self.numerics.max_steps,
                refine_tol: self.numerics.refine_tol,
                bridge_correction: self.numerics.bridge_correction,
            },
        }
    }

    /// Range checks shared by the file parser and the flag-built configs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, msg: String| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::new(key, None, msg))
            }
        };
        match self.command {
            Command::Simulate => {
                check(
                    in_range(self.dt, 0.0, 0.1, false),
                    "dt",
                    format!("must be in (0, 0.1], got {}", self.dt),
                )?;
                check_count(self.n_cycles, "n_cycles", 1, 1_000_000_000)?;
                check_count(self.replicas, "replicas", 1, 10_000)?;
            }
            Command::FiniteLab => {
                check_count(self.n_cycles, "n_cycles", 1, 1_000_000_000)?;
                check_count(self.replicas, "replicas", 1, 10_000)?;
            }
            Command::Verify => {
                check_count(self.n_max, "n_max", 5, 500)?;
                if let Some(t) = self.t_max {
                    check(
                        in_range(t, 0.0, 1e6, false),
                        "t_max",
                        format!("must be in (0, 1e6], got {t}"),
                    )?;
                }
            }
            Command::Benchmark => {
                check_count(self.grid, "grid", qsd_core::benchmarks::MIN_GRID, 4096)?;
                let name = self.reference.as_deref().unwrap_or("");
                check(
                    REFERENCE_NAMES.contains(&name),
                    "reference",
                    format!("must be one of {REFERENCE_NAMES:?}, got `{name}`"),
                )?;
            }
        }
        Ok(())
    }
}

fn in_range(v: f64, lo: f64, hi: f64, lo_inclusive: bool) -> bool {
    v.is_finite() && (if lo_inclusive { v >= lo } else { v > lo }) && v <= hi
}

fn check_count(v: usize, key: &str, lo: usize, hi: usize) -> Result<(), ConfigError> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::new(
            key,
            None,
            format!("must be in [{lo}, {hi}], got {v}"),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted key path, empty for document-level errors.
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "`{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Key path → 1-based line of the key.
fn key_lines(text: &str) -> HashMap<String, usize> {
    fn walk(
        table: &toml::de::DeTable<'_>,
        prefix: &str,
        text: &str,
        out: &mut HashMap<String, usize>,
    ) {
        for (key, value) in table {
            let path = if prefix.is_empty() {
                key.get_ref().to_string()
            } else {
                format!("{prefix}.{}", key.get_ref())
            };
            let line = text[..key.span().start.min(text.len())]
                .matches('\n')
                .count()
                + 1;
            out.insert(path.clone(), line);
            if let toml::de::DeValue::Table(inner) = value.get_ref() {
                walk(inner, &path, text, out);
            }
        }
    }
    let mut out = HashMap::new();
    if let Ok(doc) = toml::de::DeTable::parse(text) {
        walk(doc.get_ref(), "", text, &mut out);
    }
    out
}

struct Reader {
    lines: HashMap<String, usize>,
}

impl Reader {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::new(key, self.lines.get(key).copied(), message)
    }

    fn path(prefix: &str, key: &str) -> String {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    }

    fn reject_unknown(
        &self,
        table: &Table,
        prefix: &str,
        allowed: &[&str],
    ) -> Result<(), ConfigError> {
        // sorted for a stable first error
        let mut keys: Vec<&String> = table.keys().collect();
        keys.sort_by_key(|k| {
            self.lines
                .get(&Self::path(prefix, k))
                .copied()
                .unwrap_or(usize::MAX)
        });
        match keys.into_iter().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(self.err(
                &Self::path(prefix, k),
                format!("unknown key (allowed: {})", allowed.join(", ")),
            )),
            None => Ok(()),
        }
    }

    fn required<'t>(
        &self,
        table: &'t Table,
        prefix: &str,
        key: &str,
    ) -> Result<&'t Value, ConfigError> {
        table.get(key).ok_or_else(|| {
            let at = if prefix.is_empty() {
                "top level".to_string()
            } else {
                format!("[{prefix}]")
            };
            ConfigError::new(
                &Self::path(prefix, key),
                self.lines.get(prefix).copied(),
                format!("missing required key in {at}"),
            )
        })
    }

    fn float(&self, value: &Value, path: &str) -> Result<f64, ConfigError> {
        match value {
            Value::Float(v) => Ok(*v),
            Value::Integer(v) => Ok(*v as f64),
            other => Err(self.err(path, format!("expected a number, got {}", other.type_str()))),
        }
    }

    fn float_in(
        &self,
        value: &Value,
        path: &str,
        lo: f64,
        hi: f64,
        lo_inclusive: bool,
    ) -> Result<f64, ConfigError> {
        let v = self.float(value, path)?;
        if in_range(v, lo, hi, lo_inclusive) {
            Ok(v)
        } else {
            let open = if lo_inclusive { '[' } else { '(' };
            Err(self.err(path, format!("must be in {open}{lo}, {hi}], got {v}")))
        }
    }

    fn int_in(&self, value: &Value, path: &str, lo: i64, hi: i64) -> Result<i64, ConfigError> {
        match value {
            Value::Integer(v) if (lo..=hi).contains(v) => Ok(*v),
            Value::Integer(v) => Err(self.err(path, format!("must be in [{lo}, {hi}], got {v}"))),
            other => Err(self.err(
                path,
                format!("expected an integer, got {}", other.type_str()),
            )),
        }
    }

    fn string<'t>(&self, value: &'t Value, path: &str) -> Result<&'t str, ConfigError> {
        value
            .as_str()
            .ok_or_else(|| self.err(path, format!("expected a string, got {}", value.type_str())))
    }

    fn floats(&self, value: &Value, path: &str) -> Result<Vec<f64>, ConfigError> {
        let array = value.as_array().ok_or_else(|| {
            self.err(
                path,
                format!("expected an array of numbers, got {}", value.type_str()),
            )
        })?;
        array.iter().map(|v| self.float(v, path)).collect()
    }

    fn float_rows(&self, value: &Value, path: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
        let rows = value
            .as_array()
            .ok_or_else(|| self.err(path, "expected an array of arrays of numbers"))?;
        rows.iter().map(|r| self.floats(r, path)).collect()
    }

    fn table<'t>(&self, value: &'t Value, path: &str) -> Result<&'t Table, ConfigError> {
        value
            .as_table()
            .ok_or_else(|| self.err(path, format!("expected a table, got {}", value.type_str())))
    }
}

fn parse_model(r: &Reader, value: &Value) -> Result<ModelSpec, ConfigError> {
    let table = match value {
        Value::String(name) => {
            return ModelSpec::from_name(name, None).map_err(|e| r.err("model", e.to_string()));
        }
        Value::Table(t) => t,
        other => {
            return Err(r.err(
                "model",
                format!("expected a name or a table, got {}", other.type_str()),
            ))
        }
    };
    let name = r.string(r.required(table, "model", "name")?, "model.name")?;
    match name {
        "drifted-interval" => {
            r.reject_unknown(table, "model", &["name", "drift"])?;
            let drift = r.float_in(
                r.required(table, "model", "drift")?,
                "model.drift",
                -1e3,
                1e3,
                true,
            )?;
            Ok(ModelSpec::DriftedInterval { drift })
        }
        "custom-polynomial" => {
            r.reject_unknown(table, "model", &["name", "drift", "diffusion"])?;
            let drift = r.float_rows(r.required(table, "model", "drift")?, "model.drift")?;
            let diffusion =
                r.float_rows(r.required(table, "model", "diffusion")?, "model.diffusion")?;
            let spec = ModelSpec::CustomPolynomial { drift, diffusion };
            spec.build_model()
                .map_err(|e| r.err("model", e.to_string()))?;
            Ok(spec)
        }
        other => {
            r.reject_unknown(table, "model", &["name"])?;
            ModelSpec::from_name(other, None).map_err(|e| r.err("model.name", e.to_string()))
        }
    }
}

fn parse_domain(r: &Reader, value: &Value) -> Result<DomainSpec, ConfigError> {
    let table = r.table(value, "domain")?;
    let kind = r.string(r.required(table, "domain", "kind")?, "domain.kind")?;
    let spec = match kind {
        "interval" => {
            r.reject_unknown(table, "domain", &["kind", "lower", "upper"])?;
            DomainSpec::Interval {
                lower: r.float(r.required(table, "domain", "lower")?, "domain.lower")?,
                upper: r.float(r.required(table, "domain", "upper")?, "domain.upper")?,
            }
        }
        "box" => {
            r.reject_unknown(table, "domain", &["kind", "lower", "upper"])?;
            DomainSpec::Box {
                lower: r.floats(r.required(table, "domain", "lower")?, "domain.lower")?,
                upper: r.floats(r.required(table, "domain", "upper")?, "domain.upper")?,
            }
        }
        "ball" => {
            r.reject_unknown(table, "domain", &["kind", "center", "radius"])?;
            DomainSpec::Ball {
                center: r.floats(r.required(table, "domain", "center")?, "domain.center")?,
                radius: r.float(r.required(table, "domain", "radius")?, "domain.radius")?,
            }
        }
        other => {
            return Err(r.err(
                "domain.kind",
                format!("expected interval, box or ball, got `{other}`"),
            ))
        }
    };
    spec.build().map_err(|e| r.err("domain", e.to_string()))?;
    Ok(spec)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::new("", line, e.message().trim().to_string())
    })?;
    let r = Reader {
        lines: key_lines(text),
    };

    let command = match table.get("command") {
        None => Command::Simulate,
        Some(v) => {
            let name = r.string(v, "command")?;
            Command::from_name(name).ok_or_else(|| {
                r.err(
                    "command",
                    format!("expected simulate, finite-lab, verify or benchmark, got `{name}`"),
                )
            })?
        }
    };
    r.reject_unknown(&table, "", command.keys())?;
    let mut config = ExperimentConfig::empty(command);
    config.output_dir =
        PathBuf::from(r.string(r.required(&table, "", "output_dir")?, "output_dir")?);

    match command {
        Command::Simulate => {
            let model = parse_model(&r, r.required(&table, "", "model")?)?;
            let domain = table
                .get("domain")
                .map(|v| parse_domain(&r, v))
                .transpose()?;
            if domain.is_none() && model.default_domain().is_none() {
                return Err(ConfigError::new(
                    "domain",
                    None,
                    format!("model `{}` needs a [domain] table", model.name()),
                ));
            }
            if let Some(d) = &domain {
                if d.dim() != model.dim() {
                    return Err(r.err(
                        "domain",
                        format!(
                            "dimension {} does not match the model's {}",
                            d.dim(),
                            model.dim()
                        ),
                    ));
                }
            }
            let built = match &domain {
                Some(d) => d.build().map_err(|e| r.err("domain", e.to_string()))?,
                None => model.default_domain().expect("checked above"),
            };
            if let Some(v) = table.get("x0") {
                let x0 = r.floats(v, "x0")?;
                if x0.len() != model.dim() || !built.contains(&x0) {
                    return Err(r.err("x0", "must be a point inside the domain"));
                }
                config.x0 = Some(x0);
            }
            if let Some(v) = table.get("x0_box") {
                if config.x0.is_some() {
                    return Err(r.err("x0_box", "give either x0 or x0_box, not both"));
                }
                let t = r.table(v, "x0_box")?;
                r.reject_unknown(t, "x0_box", &["lower", "upper"])?;
                let lower = r.floats(r.required(t, "x0_box", "lower")?, "x0_box.lower")?;
                let upper = r.floats(r.required(t, "x0_box", "upper")?, "x0_box.upper")?;
                let d = model.dim();
                if lower.len() != d
                    || upper.len() != d
                    || lower.iter().zip(&upper).any(|(l, u)| !(l < u))
                {
                    return Err(r.err("x0_box", format!("needs {d}-dimensional lower < upper")));
                }
                // the box is convex, so checking its corners is enough
                let inside = (0..1usize << d).all(|mask| {
                    let corner: Vec<f64> = (0..d)
                        .map(|k| {
                            if mask >> k & 1 == 1 {
                                upper[k]
                            } else {
                                lower[k]
                            }
                        })
                        .collect();
                    built.contains(&corner)
                });
                if !inside {
                    return Err(r.err("x0_box", "must lie inside the domain"));
                }
                config.x0_box = Some((lower, upper));
            }
            config.model = Some(model);
            config.domain = domain;
            config.dt = r.float_in(r.required(&table, "", "dt")?, "dt", 0.0, 0.1, false)?;
            config.n_cycles = r.int_in(
                r.required(&table, "", "n_cycles")?,
                "n_cycles",
                1,
                1_000_000_000,
            )? as usize;
            config.replicas =
                r.int_in(r.required(&table, "", "replicas")?, "replicas", 1, 10_000)? as usize;
            config.master_seed = r.int_in(
                r.required(&table, "", "master_seed")?,
                "master_seed",
                0,
                i64::MAX,
            )? as u64;
            if let Some(v) = table.get("reference") {
                let name = r.string(v, "reference")?;
                if !REFERENCE_NAMES.contains(&name) {
                    return Err(r.err(
                        "reference",
                        format!("must be one of {REFERENCE_NAMES:?}, got `{name}`"),
                    ));
                }
                config.reference = Some(name.to_string());
            }
            if let Some(v) = table.get("diagnostics") {
                let t = r.table(v, "diagnostics")?;
                r.reject_unknown(t, "diagnostics", &["eta_boundary", "snapshot_base"])?;
                if let Some(v) = t.get("eta_boundary") {
                    config.diagnostics.eta_boundary =
                        r.float_in(v, "diagnostics.eta_boundary", 0.0, 1.0, false)?;
                }
                if let Some(v) = t.get("snapshot_base") {
                    config.diagnostics.snapshot_base =
                        r.int_in(v, "diagnostics.snapshot_base", 2, 1000)? as usize;
                }
            }
            if let Some(v) = table.get("numerics") {
                let t = r.table(v, "numerics")?;
                r.reject_unknown(
                    t,
                    "numerics",
                    &["thinning", "max_steps", "refine_tol", "bridge_correction"],
                )?;
                if let Some(v) = t.get("thinning") {
                    config.numerics.thinning =
                        r.int_in(v, "numerics.thinning", 1, 1_000_000)? as usize;
                }
                if let Some(v) = t.get("max_steps") {
                    config.numerics.max_steps =
                        r.int_in(v, "numerics.max_steps", 1, 1_000_000_000_000)? as u64;
                }
                if let Some(v) = t.get("refine_tol") {
                    config.numerics.refine_tol =
                        r.float_in(v, "numerics.refine_tol", 0.0, 1e-2, false)?;
                }
                if let Some(v) = t.get("bridge_correction") {
                    config.numerics.bridge_correction = v.as_bool().ok_or_else(|| {
                        r.err("numerics.bridge_correction", "expected true or false")
                    })?;
                }
            }
        }
        Command::FiniteLab => {
            config.chain = Some(PathBuf::from(
                r.string(r.required(&table, "", "chain")?, "chain")?,
            ));
            config.n_cycles = r.int_in(
                r.required(&table, "", "n_cycles")?,
                "n_cycles",
                1,
                1_000_000_000,
            )? as usize;
            config.replicas =
                r.int_in(r.required(&table, "", "replicas")?, "replicas", 1, 10_000)? as usize;
            config.master_seed = r.int_in(
                r.required(&table, "", "master_seed")?,
                "master_seed",
                0,
                i64::MAX,
            )? as u64;
        }
        Command::Verify => {
            config.chain = Some(PathBuf::from(
                r.string(r.required(&table, "", "chain")?, "chain")?,
            ));
            if let Some(v) = table.get("n_max") {
                config.n_max = r.int_in(v, "n_max", 5, 500)? as usize;
            }
            if let Some(v) = table.get("t_max") {
                config.t_max = Some(r.float_in(v, "t_max", 0.0, 1e6, false)?);
            }
        }
        Command::Benchmark => {
            let name = r.string(r.required(&table, "", "reference")?, "reference")?;
            if !REFERENCE_NAMES.contains(&name) {
                return Err(r.err(
                    "reference",
                    format!("must be one of {REFERENCE_NAMES:?}, got `{name}`"),
                ));
            }
            config.reference = Some(name.to_string());
            config.grid = r.int_in(
                r.required(&table, "", "grid")?,
                "grid",
                qsd_core::benchmarks::MIN_GRID as i64,
                4096,
            )? as usize;
        }
    }
    config.validate().map_err(|e| r.err(&e.key, e.message))?;
    Ok(config)
}
