//! Flat `key = value` experiment files.
//!
//! ```text
//! # comment
//! generator = sw:k=20,p=0.3
//! n = 2000
//! lambda = 0.01
//! mu = 0.005
//! seed = 7
//! burn_in = 10000
//! window = 10000,20000
//! sample_interval = 200
//! size_interval = 1
//! replicas = 10
//! max_snapshots = 50
//! initial_online = 1.0
//! snapshot_times = 100,15000
//! out = results
//! ```
//!
//! Every key is optional. Command-line flags override file values, which
//! override the built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use noh::experiment::ModelSpec;
use noh::generators::GeneratorSpec;
use noh::InitialOnline;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Settings {
    pub generator: Option<GeneratorSpec>,
    pub n: Option<usize>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub seed: Option<u64>,
    pub burn_in: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub sample_interval: Option<f64>,
    pub size_interval: Option<f64>,
    pub replicas: Option<usize>,
    pub max_snapshots: Option<usize>,
    pub initial_online: Option<InitialOnline>,
    pub snapshot_times: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "generator",
    "n",
    "lambda",
    "mu",
    "seed",
    "burn_in",
    "window",
    "sample_interval",
    "size_interval",
    "replicas",
    "max_snapshots",
    "initial_online",
    "snapshot_times",
    "out",
];

pub fn load(path: &Path) -> Result<Settings, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse(text: &str) -> Result<Settings, String> {
    let mut raw = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(format!("line {}: unknown key {key:?}", i + 1));
        }
        if raw.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key {key:?}", i + 1));
        }
    }

    let mut s = Settings::default();
    for (key, value) in &raw {
        match key.as_str() {
            "generator" => s.generator = Some(parse_generator(value)?),
            "n" => s.n = Some(number(key, value)?),
            "lambda" => s.lambda = Some(number(key, value)?),
            "mu" => s.mu = Some(number(key, value)?),
            "seed" => s.seed = Some(number(key, value)?),
            "burn_in" => s.burn_in = Some(number(key, value)?),
            "window" => {
                let v = number_list(key, value)?;
                let [lo, hi] = v[..] else {
                    return Err(format!("window needs two values t_lo,t_hi, got {value:?}"));
                };
                s.window = Some((lo, hi));
            }
            "sample_interval" => s.sample_interval = Some(number(key, value)?),
            "size_interval" => s.size_interval = Some(number(key, value)?),
            "replicas" => s.replicas = Some(number(key, value)?),
            "max_snapshots" => s.max_snapshots = Some(number(key, value)?),
            "initial_online" => s.initial_online = Some(parse_initial(value)?),
            "snapshot_times" => s.snapshot_times = Some(number_list(key, value)?),
            "out" => s.out = Some(PathBuf::from(value)),
            _ => unreachable!(),
        }
    }
    Ok(s)
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("{key} = {value:?} is not a valid number"))
}

pub fn number_list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    value.split(',').filter(|v| !v.trim().is_empty()).map(|v| number(key, v.trim())).collect()
}

/// `all` or an initial online fraction in `[0, 1]`.
pub fn parse_initial(value: &str) -> Result<InitialOnline, String> {
    if value.eq_ignore_ascii_case("all") {
        return Ok(InitialOnline::All);
    }
    let q: f64 = number("initial_online", value)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(format!("initial_online = {q} outside [0, 1]"));
    }
    Ok(InitialOnline::Fraction(q))
}

/// A static model string (`sf:m=5`, `sw:k=20,p=0.3`, `nve:mu=2,sigma=0.5`).
pub fn parse_generator(value: &str) -> Result<GeneratorSpec, String> {
    match value.parse::<ModelSpec>().map_err(|e| e.to_string())? {
        ModelSpec::Static(g) => Ok(g),
        ModelSpec::Noh { .. } => Err(format!("generator {value:?} must be sf, sw or nve")),
    }
}
