//! Reproducible experiment runs: replica fan-out, pooled measurements,
//! parameter-grid fitting and model comparison.
//!
//! Replica `i` of an experiment with base seed `s` simulates with seed
//! `replica_seed(s, i)`. Replicas run in parallel over one shared graph and
//! results are collected in replica order, so outputs do not depend on
//! thread scheduling.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{GeneratorKind, GeneratorSpec};
use crate::graph::{Graph, GraphError};
use crate::process::{observation_grid, InitialOnline, NohParams, NohProcess, ProcessError, SizeSeries};
use crate::rng::replica_seed;
use crate::stats::{
    assortativity, clustering_coefficient, degree_histogram, graph_degree_histogram, kl_divergence, mean_degree,
    size_histogram, skewness, FitReport, Histogram, StatsError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    /// Whether the failure is the caller's configuration rather than a
    /// runtime problem.
    pub fn is_config(&self) -> bool {
        matches!(self, Self::Config(_) | Self::Graph(GraphError::InvalidParameter(_)) | Self::Process(ProcessError::InvalidRates { .. }))
    }
}

fn config_error(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    pub noh: NohParams,
    pub seed: u64,
    pub burn_in: f64,
    /// Measurement window `[t_lo, t_hi]`.
    pub window: (f64, f64),
    /// Spacing of degree snapshots inside the window.
    pub sample_interval: f64,
    /// Spacing of online-count samples; size histograms approximate the
    /// time spent at each size.
    pub size_interval: f64,
    pub replicas: usize,
    /// Cap on the number of degree snapshots per replica.
    pub max_snapshots: usize,
    pub initial_online: InitialOnline,
    pub outputs: PathBuf,
    /// Additional instants at which `simulate` exports JSON snapshots.
    pub snapshot_times: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorSpec::small_world(2000, 20, 0.3, 1),
            noh: NohParams { lambda: 0.01, mu: 0.005 },
            seed: 1,
            burn_in: 1e4,
            window: (1e4, 2e4),
            sample_interval: 200.0,
            size_interval: 1.0,
            replicas: 10,
            max_snapshots: 50,
            initial_online: InitialOnline::All,
            outputs: PathBuf::from("out"),
            snapshot_times: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let (t_lo, t_hi) = self.window;
        if !(t_lo.is_finite() && t_hi.is_finite() && self.burn_in.is_finite()) {
            return Err(config_error("window and burn-in must be finite"));
        }
        if !(self.burn_in >= 0.0 && self.burn_in <= t_lo && t_lo < t_hi) {
            return Err(config_error(format!(
                "need 0 <= burn_in <= t_lo < t_hi, got burn_in={}, window=[{t_lo}, {t_hi}]",
                self.burn_in
            )));
        }
        if !(self.sample_interval > 0.0 && self.size_interval > 0.0) {
            return Err(config_error("sample intervals must be positive"));
        }
        if self.replicas == 0 {
            return Err(config_error("replicas must be at least 1"));
        }
        if self.max_snapshots == 0 {
            return Err(config_error("max_snapshots must be at least 1"));
        }
        NohParams::new(self.noh.lambda, self.noh.mu)?;
        if let InitialOnline::Fraction(q) = self.initial_online {
            if !(0.0..=1.0).contains(&q) {
                return Err(config_error(format!("initial online fraction {q} outside [0, 1]")));
            }
        }
        self.generator.validate()?;
        Ok(())
    }

    pub fn replica_seed(&self, replica: usize) -> u64 {
        replica_seed(self.seed, replica as u64)
    }

    /// Online-count sampling instants from 0 to `t_hi`.
    pub fn size_grid(&self) -> Vec<f64> {
        observation_grid(0.0, self.window.1, self.size_interval)
    }

    /// Degree snapshot instants inside the window, at most `max_snapshots`.
    pub fn snapshot_grid(&self) -> Vec<f64> {
        let mut grid = observation_grid(self.window.0, self.window.1, self.sample_interval);
        grid.truncate(self.max_snapshots);
        grid
    }
}

fn new_process<'g>(graph: &'g Graph, params: NohParams, config: &ExperimentConfig, replica: usize) -> Result<NohProcess<'g>, ExperimentError> {
    Ok(NohProcess::new(graph, params, config.replica_seed(replica), config.initial_online)?)
}

/// Online-count series of each replica, sampled on [`ExperimentConfig::size_grid`].
pub fn size_series_replicas(graph: &Graph, params: NohParams, config: &ExperimentConfig) -> Result<Vec<SizeSeries>, ExperimentError> {
    config.validate()?;
    let grid = config.size_grid();
    (0..config.replicas)
        .into_par_iter()
        .map(|i| Ok(new_process(graph, params, config, i)?.size_series(&grid)?))
        .collect()
}

/// Size histogram over the window, pooled across replicas.
pub fn pooled_size_histogram(graph: &Graph, params: NohParams, config: &ExperimentConfig) -> Result<Histogram, ExperimentError> {
    let mut pooled = Histogram::new();
    for series in size_series_replicas(graph, params, config)? {
        pooled.merge(&size_histogram(&series, config.window)?);
    }
    Ok(pooled)
}

/// Mean online count over the window, pooled across replicas.
pub fn pooled_window_mean(graph: &Graph, params: NohParams, config: &ExperimentConfig) -> Result<f64, ExperimentError> {
    let h = pooled_size_histogram(graph, params, config)?;
    h.mean().ok_or_else(|| StatsError::EmptyWindow { t_lo: config.window.0, t_hi: config.window.1 }.into())
}

/// Degree observations of one replica, one entry per snapshot instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSnapshots {
    pub times: Vec<f64>,
    /// `None` where no vertex was online.
    pub histograms: Vec<Option<Histogram>>,
    /// Overlay metrics per snapshot, when requested.
    pub overlay: Vec<Option<OverlayMetrics>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlayMetrics {
    pub clustering: f64,
    pub mean_degree: f64,
    pub assortativity: f64,
}

fn overlay_metrics(g: &Graph) -> Option<OverlayMetrics> {
    Some(OverlayMetrics {
        clustering: clustering_coefficient(g).ok()?,
        mean_degree: mean_degree(g).ok()?,
        assortativity: assortativity(g).ok()?,
    })
}

pub fn degree_snapshots(
    graph: &Graph,
    params: NohParams,
    config: &ExperimentConfig,
    replica: usize,
    with_overlay: bool,
) -> Result<DegreeSnapshots, ExperimentError> {
    let times = config.snapshot_grid();
    let mut process = new_process(graph, params, config, replica)?;
    let mut histograms = Vec::with_capacity(times.len());
    let mut overlay = Vec::with_capacity(times.len());
    for &t in &times {
        process.advance_to(t)?;
        let snap = process.snapshot();
        histograms.push(degree_histogram(&snap).ok());
        overlay.push(if with_overlay { overlay_metrics(&snap.overlay(graph)) } else { None });
    }
    Ok(DegreeSnapshots { times, histograms, overlay })
}

pub fn degree_snapshots_replicas(
    graph: &Graph,
    params: NohParams,
    config: &ExperimentConfig,
    with_overlay: bool,
) -> Result<Vec<DegreeSnapshots>, ExperimentError> {
    config.validate()?;
    (0..config.replicas)
        .into_par_iter()
        .map(|i| degree_snapshots(graph, params, config, i, with_overlay))
        .collect()
}

/// Degree skewness computed per snapshot, then averaged over all snapshots
/// of all replicas. Snapshots with fewer than three online vertices or no
/// degree spread are skipped.
pub fn averaged_snapshot_skewness(runs: &[DegreeSnapshots]) -> Option<f64> {
    let values: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.histograms.iter().flatten())
        .filter_map(|h| skewness(&h.samples()).ok())
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// All snapshot degree histograms merged into one.
pub fn pooled_degree_histogram(runs: &[DegreeSnapshots]) -> Histogram {
    let mut pooled = Histogram::new();
    for h in runs.iter().flat_map(|r| r.histograms.iter().flatten()) {
        pooled.merge(h);
    }
    pooled
}

/// A model in a comparison: either a static graph's own degree distribution,
/// or the online overlay of NOH dynamics on an initial graph.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Static(GeneratorSpec),
    Noh { initial: InitialGraph, params: NohParams },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGraph {
    Generated(GeneratorSpec),
    /// The reference graph being fitted.
    Reference,
    /// Scale-free graph whose `m` is set by [`matched_scale_free_m`]
    /// against the reference.
    MatchedScaleFree { n_vertices: usize, seed: u64 },
}

/// Attachment count `m` for which the online overlay of a scale-free graph
/// has the reference's mean degree: an online vertex keeps each of its
/// `~2m` neighbors with probability `lambda / (lambda + mu)`.
pub fn matched_scale_free_m(reference_mean_degree: f64, params: NohParams) -> usize {
    let m = reference_mean_degree / (2.0 * params.online_probability());
    (m.round() as usize).max(1)
}

impl ModelSpec {
    /// Fills in vertex counts left at 0 with `n` and generator seeds with
    /// `seed`, and turns a matched scale-free initial graph into a concrete
    /// generator.
    fn resolved(&self, n: usize, seed: u64, reference_mean_degree: f64) -> Self {
        let fix = |g: &GeneratorSpec| {
            let mut g = g.clone();
            if g.n_vertices == 0 {
                g.n_vertices = n;
            }
            if g.seed == 0 {
                g.seed = seed;
            }
            g
        };
        match self {
            Self::Static(g) => Self::Static(fix(g)),
            Self::Noh { initial: InitialGraph::Generated(g), params } => {
                Self::Noh { initial: InitialGraph::Generated(fix(g)), params: *params }
            }
            Self::Noh { initial: InitialGraph::MatchedScaleFree { n_vertices, seed: s }, params } => {
                let m = matched_scale_free_m(reference_mean_degree, *params);
                let g = GeneratorSpec::scale_free(*n_vertices, m, *s);
                Self::Noh { initial: InitialGraph::Generated(fix(&g)), params: *params }
            }
            other => other.clone(),
        }
    }
}

fn generator_label(g: &GeneratorSpec) -> String {
    match &g.kind {
        GeneratorKind::ScaleFree { m } => format!("SF(m={m})"),
        GeneratorKind::SmallWorld { k, p } => format!("SW(K={k};p={p})"),
        GeneratorKind::Nve { mu, sigma } => format!("NVE(mu={mu};sigma={sigma})"),
        GeneratorKind::EdgeList(path) => format!("edges({})", path.display()),
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Static(g) => f.write_str(&generator_label(g)),
            Self::Noh { initial, params } => {
                let init = match initial {
                    InitialGraph::Generated(g) => generator_label(g),
                    InitialGraph::Reference => "reference".into(),
                    InitialGraph::MatchedScaleFree { .. } => "SF(m=auto)".into(),
                };
                write!(f, "NOH(lambda={};mu={};init={init})", params.lambda, params.mu)
            }
        }
    }
}

/// Parses `kind:key=value,...`, e.g. `sf:m=5`, `sw:k=4,p=0.4`,
/// `nve:mu=2,sigma=0.5`, `noh:lambda=0.01,mu=0.013,init=sf,m=5` or
/// `noh:lambda=0.01,mu=0.013,init=real`. `n` and `seed` default to the
/// reference graph's size and the experiment seed.
impl FromStr for ModelSpec {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut fields = std::collections::BTreeMap::new();
        for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| config_error(format!("model {s:?}: expected key=value, got {pair:?}")))?;
            fields.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
        let kind = kind.trim().to_ascii_lowercase();
        if kind == "noh" {
            let lambda = take_f64(&fields, "lambda", s)?;
            let mu = take_f64(&fields, "mu", s)?;
            let params = NohParams::new(lambda, mu)?;
            let init = fields.get("init").map(String::as_str).unwrap_or("real").to_ascii_lowercase();
            let initial = if init == "real" || init == "reference" {
                InitialGraph::Reference
            } else if init == "sf" && fields.get("m").map(String::as_str) == Some("auto") {
                InitialGraph::MatchedScaleFree {
                    n_vertices: opt_usize(&fields, "n", s)?,
                    seed: opt_usize(&fields, "seed", s)? as u64,
                }
            } else {
                InitialGraph::Generated(parse_generator(&init, &fields, s)?)
            };
            Ok(Self::Noh { initial, params })
        } else {
            Ok(Self::Static(parse_generator(&kind, &fields, s)?))
        }
    }
}

fn take_f64(fields: &std::collections::BTreeMap<String, String>, key: &str, spec: &str) -> Result<f64, ExperimentError> {
    let raw = fields.get(key).ok_or_else(|| config_error(format!("model {spec:?}: missing {key}")))?;
    raw.parse().map_err(|_| config_error(format!("model {spec:?}: {key}={raw:?} is not a number")))
}

fn take_usize(fields: &std::collections::BTreeMap<String, String>, key: &str, spec: &str) -> Result<usize, ExperimentError> {
    let raw = fields.get(key).ok_or_else(|| config_error(format!("model {spec:?}: missing {key}")))?;
    raw.parse().map_err(|_| config_error(format!("model {spec:?}: {key}={raw:?} is not a count")))
}

fn opt_usize(fields: &std::collections::BTreeMap<String, String>, key: &str, spec: &str) -> Result<usize, ExperimentError> {
    if fields.contains_key(key) { take_usize(fields, key, spec) } else { Ok(0) }
}

fn parse_generator(kind: &str, fields: &std::collections::BTreeMap<String, String>, spec: &str) -> Result<GeneratorSpec, ExperimentError> {
    let n = opt_usize(fields, "n", spec)?;
    let seed = opt_usize(fields, "seed", spec)? as u64;
    let g = match kind {
        "sf" => GeneratorSpec::scale_free(n, take_usize(fields, "m", spec)?, seed),
        "sw" => GeneratorSpec::small_world(n, take_usize(fields, "k", spec)?, take_f64(fields, "p", spec)?, seed),
        "nve" => GeneratorSpec::nve(n, take_f64(fields, "mu", spec)?, take_f64(fields, "sigma", spec)?, seed),
        other => return Err(config_error(format!("model {spec:?}: unknown kind {other:?} (sf, sw, nve, noh)"))),
    };
    if let GeneratorKind::SmallWorld { k, .. } = g.kind {
        if k % 2 != 0 {
            return Err(config_error(format!("model {spec:?}: small-world K must be even, got K={k}")));
        }
    }
    Ok(g)
}

/// One row of a fit or comparison report.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub model: String,
    pub report: FitReport,
    /// Mean degree of the model's initial graph (equals `Mean degree` for
    /// static models).
    pub initial_mean_degree: f64,
}

// csv cannot serialize flattened structs, so rows go through this flat shape.
#[derive(Serialize, Deserialize)]
struct FitRowCsv {
    #[serde(rename = "Model")]
    model: String,
    #[serde(rename = "KL")]
    kl: Option<f64>,
    #[serde(rename = "Clustering")]
    clustering: f64,
    #[serde(rename = "Mean degree")]
    mean_degree: f64,
    #[serde(rename = "Assortativity")]
    assortativity: f64,
    #[serde(rename = "Skewness")]
    skewness: f64,
    #[serde(rename = "Initial mean degree")]
    initial_mean_degree: f64,
}

impl From<&FitRow> for FitRowCsv {
    fn from(row: &FitRow) -> Self {
        let r = &row.report;
        Self {
            model: row.model.clone(),
            kl: r.kl,
            clustering: r.clustering,
            mean_degree: r.mean_degree,
            assortativity: r.assortativity,
            skewness: r.skewness,
            initial_mean_degree: row.initial_mean_degree,
        }
    }
}

impl From<FitRowCsv> for FitRow {
    fn from(row: FitRowCsv) -> Self {
        Self {
            model: row.model,
            report: FitReport {
                kl: row.kl,
                clustering: row.clustering,
                mean_degree: row.mean_degree,
                assortativity: row.assortativity,
                skewness: row.skewness,
            },
            initial_mean_degree: row.initial_mean_degree,
        }
    }
}

/// Evaluates one model against the degree distribution of `reference`.
pub fn evaluate_model(reference: &Graph, model: &ModelSpec, config: &ExperimentConfig) -> Result<FitRow, ExperimentError> {
    let model = model.resolved(reference.n_vertices(), config.seed, mean_degree(reference)?);
    let target = graph_degree_histogram(reference).to_dense_pmf();
    match &model {
        ModelSpec::Static(spec) => {
            spec.validate()?;
            let g = spec.build()?;
            let mut report = FitReport::for_graph(&g)?;
            report.kl = Some(kl_divergence(&target, &graph_degree_histogram(&g))?);
            let initial_mean_degree = report.mean_degree;
            Ok(FitRow { model: model.to_string(), report, initial_mean_degree })
        }
        ModelSpec::Noh { initial, params } => {
            let owned;
            let g = match initial {
                InitialGraph::Reference => reference,
                InitialGraph::MatchedScaleFree { .. } => unreachable!("resolved above"),
                InitialGraph::Generated(spec) => {
                    spec.validate()?;
                    owned = spec.build()?;
                    &owned
                }
            };
            let runs = degree_snapshots_replicas(g, *params, config, true)?;
            let pooled = pooled_degree_histogram(&runs);
            let overlays: Vec<OverlayMetrics> = runs.iter().flat_map(|r| r.overlay.iter().flatten().copied()).collect();
            if overlays.is_empty() {
                return Err(StatsError::Degenerate("no snapshot had a measurable online overlay").into());
            }
            let avg = |f: fn(&OverlayMetrics) -> f64| overlays.iter().map(f).sum::<f64>() / overlays.len() as f64;
            let report = FitReport {
                kl: Some(kl_divergence(&target, &pooled)?),
                clustering: avg(|o| o.clustering),
                mean_degree: avg(|o| o.mean_degree),
                assortativity: avg(|o| o.assortativity),
                skewness: averaged_snapshot_skewness(&runs).ok_or(StatsError::ZeroVariance)?,
            };
            Ok(FitRow { model: model.to_string(), report, initial_mean_degree: mean_degree(g)? })
        }
    }
}

/// Runs NOH on `initial` for every `(lambda, mu)` in the grid and scores
/// each against `reference`. Rows come back sorted by KL, ties broken by
/// `(lambda, mu)`.
pub fn fit_grid(
    reference: &Graph,
    initial: Option<&GeneratorSpec>,
    lambda_grid: &[f64],
    mu_grid: &[f64],
    config: &ExperimentConfig,
) -> Result<Vec<(NohParams, FitRow)>, ExperimentError> {
    if lambda_grid.is_empty() || mu_grid.is_empty() {
        return Err(config_error("lambda and mu grids must be nonempty"));
    }
    let mut cells = Vec::new();
    for &lambda in lambda_grid {
        for &mu in mu_grid {
            cells.push(NohParams::new(lambda, mu)?);
        }
    }
    let initial = match initial {
        Some(spec) => InitialGraph::Generated(spec.clone()),
        None => InitialGraph::Reference,
    };
    let mut rows = cells
        .into_par_iter()
        .map(|params| {
            let model = ModelSpec::Noh { initial: initial.clone(), params };
            evaluate_model(reference, &model, config).map(|row| (params, row))
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|(pa, a), (pb, b)| {
        let ka = a.report.kl.unwrap_or(f64::INFINITY);
        let kb = b.report.kl.unwrap_or(f64::INFINITY);
        ka.total_cmp(&kb).then(pa.lambda.total_cmp(&pb.lambda)).then(pa.mu.total_cmp(&pb.mu))
    });
    Ok(rows)
}

/// One report row per model plus a final `Real` row with the reference
/// graph's own metrics.
pub fn compare_models(reference: &Graph, models: &[ModelSpec], config: &ExperimentConfig) -> Result<Vec<FitRow>, ExperimentError> {
    if models.is_empty() {
        return Err(config_error("at least one model is required"));
    }
    let mut rows = models
        .par_iter()
        .map(|m| evaluate_model(reference, m, config))
        .collect::<Result<Vec<_>, _>>()?;
    let report = FitReport::for_graph(reference)?;
    rows.push(FitRow { model: "Real".into(), initial_mean_degree: report.mean_degree, report });
    Ok(rows)
}

pub fn write_fit_rows<W: Write>(rows: &[FitRow], writer: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(FitRowCsv::from(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fit_rows<R: io::Read>(reader: R) -> Result<Vec<FitRow>, ExperimentError> {
    let rows: Vec<FitRowCsv> = csv::Reader::from_reader(reader).deserialize().collect::<Result<_, _>>()?;
    Ok(rows.into_iter().map(FitRow::from).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeRecord {
    pub t: f64,
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DegreeRecord {
    pub t: OrderedTime,
    pub vertex: usize,
    pub online_degree: usize,
}

/// `f64` time wrapper with a total order, for sortable records.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderedTime(pub f64);

impl PartialEq for OrderedTime {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}
impl Eq for OrderedTime {}
impl PartialOrd for OrderedTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrderedTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// CSV with header `t,size`.
pub fn write_size_csv<W: Write>(series: &SizeSeries, writer: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    for (t, size) in series.iter() {
        w.serialize(SizeRecord { t, size })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_size_csv<R: io::Read>(reader: R) -> Result<SizeSeries, ExperimentError> {
    let mut series = SizeSeries::default();
    for rec in csv::Reader::from_reader(reader).deserialize::<SizeRecord>() {
        let rec = rec?;
        series.times.push(rec.t);
        series.sizes.push(rec.size);
    }
    Ok(series)
}

/// CSV with header `t,vertex,online_degree`.
pub fn write_degree_csv<W: Write>(records: &[DegreeRecord], writer: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    for rec in records {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_degree_csv<R: io::Read>(reader: R) -> Result<Vec<DegreeRecord>, ExperimentError> {
    Ok(csv::Reader::from_reader(reader).deserialize().collect::<Result<_, _>>()?)
}

/// Files written by [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationArtifacts {
    pub size_csv: Vec<PathBuf>,
    pub degree_csv: Vec<PathBuf>,
    pub snapshot_json: Vec<PathBuf>,
    pub summary: PathBuf,
}

/// Runs every replica and writes, per replica `i`:
///
/// * `sizes_r{i}.csv` : online count on the size grid (`t,size`)
/// * `degrees_r{i}.csv` : online degree of each online vertex at each
///   snapshot instant (`t,vertex,online_degree`)
/// * `snapshot_r{i}_t{t}.json` : for each configured snapshot time
///
/// plus `summary.csv` with the pooled window mean next to the stationary
/// expectation.
pub fn simulate(config: &ExperimentConfig) -> Result<SimulationArtifacts, ExperimentError> {
    config.validate()?;
    let graph = config.generator.build()?;
    let out = &config.outputs;
    fs::create_dir_all(out)?;

    let size_grid = config.size_grid();
    let snap_grid = config.snapshot_grid();
    let mut json_times = config.snapshot_times.clone();
    json_times.sort_by(f64::total_cmp);
    json_times.dedup();
    if json_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(config_error("snapshot times must be finite and non-negative"));
    }

    let runs = (0..config.replicas)
        .into_par_iter()
        .map(|i| run_simulation_replica(&graph, config, i, &size_grid, &snap_grid, &json_times))
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    // single writer
    let mut artifacts = SimulationArtifacts {
        size_csv: Vec::new(),
        degree_csv: Vec::new(),
        snapshot_json: Vec::new(),
        summary: out.join("summary.csv"),
    };
    let mut pooled = Histogram::new();
    for (i, run) in runs.iter().enumerate() {
        let path = out.join(format!("sizes_r{i}.csv"));
        write_size_csv(&run.sizes, fs::File::create(&path)?)?;
        artifacts.size_csv.push(path);
        let path = out.join(format!("degrees_r{i}.csv"));
        write_degree_csv(&run.degrees, fs::File::create(&path)?)?;
        artifacts.degree_csv.push(path);
        for (t, json) in &run.snapshots {
            let path = out.join(format!("snapshot_r{i}_t{t}.json"));
            fs::write(&path, json)?;
            artifacts.snapshot_json.push(path);
        }
        pooled.merge(&size_histogram(&run.sizes, config.window)?);
    }

    let theory = crate::theory::TheoryParams::new(graph.n_vertices() as u64, config.noh.lambda, config.noh.mu)
        .map_err(|e| config_error(e.to_string()))?;
    let mut w = csv::Writer::from_writer(fs::File::create(&artifacts.summary)?);
    w.write_record(["n_vertices", "n_edges", "lambda", "mu", "replicas", "window_mean", "expected_size", "variance_size"])?;
    w.write_record([
        graph.n_vertices().to_string(),
        graph.n_edges().to_string(),
        config.noh.lambda.to_string(),
        config.noh.mu.to_string(),
        config.replicas.to_string(),
        pooled.mean().unwrap_or(f64::NAN).to_string(),
        crate::theory::expected_size(&theory).to_string(),
        crate::theory::variance_size(&theory).to_string(),
    ])?;
    w.flush()?;
    Ok(artifacts)
}

struct ReplicaRun {
    sizes: SizeSeries,
    degrees: Vec<DegreeRecord>,
    snapshots: Vec<(f64, Vec<u8>)>,
}

fn run_simulation_replica(
    graph: &Graph,
    config: &ExperimentConfig,
    replica: usize,
    size_grid: &[f64],
    snap_grid: &[f64],
    json_times: &[f64],
) -> Result<ReplicaRun, ExperimentError> {
    let mut process = new_process(graph, config.noh, config, replica)?;
    // merge the three instant streams so the process only moves forward
    let mut instants: Vec<(f64, u8)> = size_grid.iter().map(|&t| (t, 0u8)).collect();
    instants.extend(snap_grid.iter().map(|&t| (t, 1u8)));
    instants.extend(json_times.iter().map(|&t| (t, 2u8)));
    instants.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut run = ReplicaRun { sizes: SizeSeries::default(), degrees: Vec::new(), snapshots: Vec::new() };
    for (t, what) in instants {
        process.advance_to(t)?;
        match what {
            0 => {
                run.sizes.times.push(t);
                run.sizes.sizes.push(process.online_count());
            }
            1 => {
                let snap = process.snapshot();
                run.degrees.extend(snap.online.iter().zip(&snap.online_degree).map(|(&vertex, &online_degree)| DegreeRecord {
                    t: OrderedTime(t),
                    vertex,
                    online_degree,
                }));
            }
            _ => {
                let mut buf = Vec::new();
                process.snapshot().write_json(&mut buf)?;
                run.snapshots.push((t, buf));
            }
        }
    }
    Ok(run)
}

/// Writes `rows` to `path`, creating parent directories.
pub fn write_fit_report(rows: &[FitRow], path: &Path) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    write_fit_rows(rows, fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            generator: GeneratorSpec::small_world(200, 6, 0.2, 3),
            noh: NohParams { lambda: 0.05, mu: 0.05 },
            seed: 9,
            burn_in: 100.0,
            window: (100.0, 300.0),
            sample_interval: 20.0,
            size_interval: 1.0,
            replicas: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn defaults_follow_the_measurement_protocol() {
        let c = ExperimentConfig::default();
        assert_eq!(c.window, (1e4, 2e4));
        assert_eq!(c.burn_in, 1e4);
        assert_eq!(c.sample_interval, 200.0);
        assert_eq!(c.replicas, 10);
        assert_eq!(c.snapshot_grid().len(), 50);
        c.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let bad = [
            ExperimentConfig { window: (100.0, 100.0), ..small_config() },
            ExperimentConfig { burn_in: 200.0, ..small_config() },
            ExperimentConfig { sample_interval: 0.0, ..small_config() },
            ExperimentConfig { replicas: 0, ..small_config() },
            ExperimentConfig { noh: NohParams { lambda: 0.0, mu: 1.0 }, ..small_config() },
            ExperimentConfig { generator: GeneratorSpec::small_world(100, 5, 0.4, 0), ..small_config() },
        ];
        for c in bad {
            let err = c.validate().unwrap_err();
            assert!(err.is_config(), "{err}");
        }
    }

    #[test]
    fn pooled_histogram_counts_every_replica() {
        let c = small_config();
        let g = c.generator.build().unwrap();
        let h = pooled_size_histogram(&g, c.noh, &c).unwrap();
        assert_eq!(h.total(), 3 * 201);
        assert!(h.max().unwrap() <= 200);
    }

    #[test]
    fn replicas_are_deterministic_and_distinct() {
        let c = small_config();
        let g = c.generator.build().unwrap();
        let a = size_series_replicas(&g, c.noh, &c).unwrap();
        let b = size_series_replicas(&g, c.noh, &c).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].sizes, a[1].sizes);
    }

    #[test]
    fn model_spec_parsing() {
        let m: ModelSpec = "sf:m=5".parse().unwrap();
        assert_eq!(m, ModelSpec::Static(GeneratorSpec::scale_free(0, 5, 0)));
        let m: ModelSpec = "noh:lambda=0.01,mu=0.013,init=sf,m=6".parse().unwrap();
        assert_eq!(
            m,
            ModelSpec::Noh {
                initial: InitialGraph::Generated(GeneratorSpec::scale_free(0, 6, 0)),
                params: NohParams { lambda: 0.01, mu: 0.013 }
            }
        );
        let m: ModelSpec = "noh:lambda=0.01,mu=0.013,init=sf,m=auto".parse().unwrap();
        assert!(matches!(m, ModelSpec::Noh { initial: InitialGraph::MatchedScaleFree { n_vertices: 0, seed: 0 }, .. }));
        let m: ModelSpec = "noh:lambda=1,mu=2".parse().unwrap();
        assert!(matches!(m, ModelSpec::Noh { initial: InitialGraph::Reference, .. }));
        let err = "sw:k=5,p=0.4".parse::<ModelSpec>().unwrap_err().to_string();
        assert!(err.contains("even"), "{err}");
        assert!("xx:m=1".parse::<ModelSpec>().is_err());
        assert!("sf".parse::<ModelSpec>().is_err());
        assert!("noh:lambda=0,mu=1".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn matched_m_targets_reference_mean_degree() {
        let p = NohParams { lambda: 0.01, mu: 0.013 };
        assert_eq!(matched_scale_free_m(5.52, p), 6);
        assert_eq!(matched_scale_free_m(10.0, NohParams { lambda: 1.0, mu: 1.0 }), 10);
        assert_eq!(matched_scale_free_m(0.1, p), 1);
    }

    #[test]
    fn single_model_report_has_model_and_real_rows() {
        let reference = GeneratorSpec::scale_free(300, 3, 5).build().unwrap();
        let c = ExperimentConfig { replicas: 1, ..small_config() };
        let rows = compare_models(&reference, &["sw:k=6,p=0.3".parse().unwrap()], &c).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].model, "Real");
        assert!(rows[0].report.kl.unwrap() > 0.0);
        assert!(rows[1].report.kl.is_none());
        let mut buf = Vec::new();
        write_fit_rows(&rows, &mut buf).unwrap();
        assert!(buf.starts_with(b"Model,KL,Clustering,Mean degree,Assortativity,Skewness,Initial mean degree\n"));
        assert_eq!(read_fit_rows(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn empty_grids_and_model_lists_are_config_errors() {
        let g = GeneratorSpec::scale_free(50, 2, 1).build().unwrap();
        let c = small_config();
        assert!(fit_grid(&g, None, &[], &[0.1], &c).unwrap_err().is_config());
        assert!(compare_models(&g, &[], &c).unwrap_err().is_config());
    }

    #[test]
    fn csv_readers_invert_writers() {
        let series = SizeSeries { times: vec![0.0, 0.1, 1e4 + 0.3], sizes: vec![5, 4, 3] };
        let mut buf = Vec::new();
        write_size_csv(&series, &mut buf).unwrap();
        assert!(buf.starts_with(b"t,size\n"));
        assert_eq!(read_size_csv(buf.as_slice()).unwrap(), series);

        let recs = vec![DegreeRecord { t: OrderedTime(0.5), vertex: 3, online_degree: 2 }];
        let mut buf = Vec::new();
        write_degree_csv(&recs, &mut buf).unwrap();
        assert!(buf.starts_with(b"t,vertex,online_degree\n"));
        assert_eq!(read_degree_csv(buf.as_slice()).unwrap(), recs);
    }
}
