//! Finite absorbing chains read from TOML:
//!
//! ```toml
//! n_states = 2                        # optional, checked against q
//! q = [[-2.0, 1.0], [1.0, -2.0]]      # sub-generator, row i = jumps out of i
//! start = 0                           # optional, first state of finite-lab runs
//! mu = [1.0, 0.0]                     # optional, initial law for verify
//! ```

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use nalgebra::DVector;
use qsd_core::green_lab::AbsorbingChain;
use toml::{Table, Value};

#[derive(Debug, Clone)]
pub struct ChainFile {
    pub chain: AbsorbingChain,
    pub start: usize,
    pub mu: DVector<f64>,
}

fn numbers(value: &Value, key: &str) -> Result<Vec<f64>> {
    let array = value
        .as_array()
        .with_context(|| format!("`{key}` must be an array"))?;
    array
        .iter()
        .map(|v| match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(x) => Ok(*x as f64),
            other => bail!("`{key}` has a non-numeric entry ({})", other.type_str()),
        })
        .collect()
}

pub fn parse_chain(text: &str) -> Result<ChainFile> {
    let table: Table = text.parse().context("chain file is not valid TOML")?;
    if let Some(key) = table
        .keys()
        .find(|k| !["n_states", "q", "start", "mu"].contains(&k.as_str()))
    {
        bail!("unknown key `{key}` in chain file (allowed: n_states, q, start, mu)");
    }
    let rows = table
        .get("q")
        .context("chain file needs `q`")?
        .as_array()
        .context("`q` must be an array of rows")?
        .iter()
        .map(|r| numbers(r, "q"))
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len();
    if let Some(v) = table.get("n_states") {
        let declared = v.as_integer().context("`n_states` must be an integer")?;
        ensure!(
            declared == n as i64,
            "`n_states` = {declared} but `q` has {n} rows"
        );
    }
    let chain = AbsorbingChain::from_rows(&rows).context("invalid `q`")?;
    let start = match table.get("start") {
        Some(v) => {
            let s = v.as_integer().context("`start` must be an integer")?;
            ensure!(
                (0..n as i64).contains(&s),
                "`start` = {s} is not a state index below {n}"
            );
            s as usize
        }
        None => 0,
    };
    let mu = match table.get("mu") {
        Some(v) => {
            let mu = numbers(v, "mu")?;
            ensure!(
                mu.len() == n,
                "`mu` has {} entries for {n} states",
                mu.len()
            );
            ensure!(
                mu.iter().all(|&m| m >= 0.0) && (mu.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
                "`mu` must be a probability vector"
            );
            DVector::from_vec(mu)
        }
        None => DVector::from_fn(n, |i, _| if i == start { 1.0 } else { 0.0 }),
    };
    Ok(ChainFile { chain, start, mu })
}

pub fn read_chain(path: &Path) -> Result<ChainFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading chain file {}", path.display()))?;
    parse_chain(&text).with_context(|| format!("in chain file {}", path.display()))
}
