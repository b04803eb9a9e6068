//! Histograms, KL divergence, skewness and topology metrics.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::process::{OnlineSnapshot, SizeSeries};

/// Pseudo-count given to empty bins in [`kl_divergence`], i.e. a frequency
/// floor of `1 / (2 * total)`.
pub const KL_FLOOR_COUNT: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("no samples inside the window [{t_lo}, {t_hi}]")]
    EmptyWindow { t_lo: f64, t_hi: f64 },
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("no online vertices in the snapshot")]
    NoOnlineVertices,
    #[error("skewness needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("skewness is undefined for zero variance")]
    ZeroVariance,
    #[error("length mismatch: {0} observed vs {1} predicted")]
    LengthMismatch(usize, usize),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
}

/// Counts of non-negative integer observations (sizes, degrees).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    counts: BTreeMap<usize, u64>,
    total: u64,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values<I: IntoIterator<Item = usize>>(values: I) -> Self {
        let mut h = Self::new();
        for v in values {
            h.add(v);
        }
        h
    }

    pub fn add(&mut self, value: usize) {
        self.add_count(value, 1);
    }

    pub fn add_count(&mut self, value: usize, count: u64) {
        if count > 0 {
            *self.counts.entry(value).or_insert(0) += count;
            self.total += count;
        }
    }

    /// Pools another histogram's counts into this one.
    pub fn merge(&mut self, other: &Histogram) {
        for (&v, &c) in &other.counts {
            self.add_count(v, c);
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, value: usize) -> u64 {
        self.counts.get(&value).copied().unwrap_or(0)
    }

    pub fn frequency(&self, value: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(value) as f64 / self.total as f64
        }
    }

    /// Observed values, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.keys().copied()
    }

    /// `(value, count)` pairs, ascending by value.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&v, &c)| (v, c))
    }

    pub fn min(&self) -> Option<usize> {
        self.counts.keys().next().copied()
    }

    pub fn max(&self) -> Option<usize> {
        self.counts.keys().next_back().copied()
    }

    /// Most frequent value; the smallest one on ties.
    pub fn mode(&self) -> Option<usize> {
        let mut best: Option<(usize, u64)> = None;
        for (v, c) in self.iter() {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((v, c));
            }
        }
        best.map(|(v, _)| v)
    }

    pub fn mean(&self) -> Option<f64> {
        (self.total > 0).then(|| self.iter().map(|(v, c)| v as f64 * c as f64).sum::<f64>() / self.total as f64)
    }

    /// Frequencies as a dense vector indexed by value, `0..=max`.
    pub fn to_dense_pmf(&self) -> Vec<f64> {
        let Some(max) = self.max() else { return Vec::new() };
        let mut pmf = vec![0.0; max + 1];
        for (v, c) in self.iter() {
            pmf[v] = c as f64 / self.total as f64;
        }
        pmf
    }

    /// Expands back into the individual observations, ascending.
    pub fn samples(&self) -> Vec<f64> {
        self.iter().flat_map(|(v, c)| std::iter::repeat_n(v as f64, c as usize)).collect()
    }

    /// CSV with header `value,count,frequency`.
    pub fn write_csv<W: Write>(&self, writer: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["value", "count", "frequency"])?;
        for (v, c) in self.iter() {
            w.write_record([v.to_string(), c.to_string(), self.frequency(v).to_string()])?;
        }
        w.flush()
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv); the
    /// frequency column is recomputed from counts.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, csv::Error> {
        #[derive(Deserialize)]
        struct Row {
            value: usize,
            count: u64,
        }
        let mut h = Self::new();
        for row in csv::Reader::from_reader(reader).deserialize::<Row>() {
            let row = row?;
            h.add_count(row.value, row.count);
        }
        Ok(h)
    }
}

/// Histogram of sizes observed at times inside `[t_lo, t_hi]`.
pub fn size_histogram(series: &SizeSeries, window: (f64, f64)) -> Result<Histogram, StatsError> {
    let (t_lo, t_hi) = window;
    let h = Histogram::from_values(series.iter().filter(|&(t, _)| t >= t_lo && t <= t_hi).map(|(_, n)| n));
    if h.is_empty() {
        return Err(StatsError::EmptyWindow { t_lo, t_hi });
    }
    Ok(h)
}

/// `KL(p || q) = sum_n p_n ln(p_n / q_n)` in nats, with `p` given densely
/// (index = value) and `q` an empirical histogram.
///
/// Empty bins of `q` where `p_n > 0` would make the sum infinite, so the
/// comparison runs over the states where either side has mass, every empty
/// bin receives [`KL_FLOOR_COUNT`] pseudo-counts, and the smoothed `q` is
/// renormalized over those states. Bins that are already occupied keep their
/// raw counts.
pub fn kl_divergence(p: &[f64], q: &Histogram) -> Result<f64, StatsError> {
    kl_divergence_with_floor(p, q, KL_FLOOR_COUNT)
}

pub fn kl_divergence_with_floor(p: &[f64], q: &Histogram, floor_count: f64) -> Result<f64, StatsError> {
    if q.is_empty() {
        return Err(StatsError::EmptyHistogram);
    }
    let zero_bins = p.iter().enumerate().filter(|&(n, &pn)| pn > 0.0 && q.count(n) == 0).count();
    let norm = q.total() as f64 + floor_count * zero_bins as f64;
    let kl = p
        .iter()
        .enumerate()
        .filter(|&(_, &pn)| pn > 0.0)
        .map(|(n, &pn)| {
            let c = q.count(n);
            let qn = if c == 0 { floor_count } else { c as f64 } / norm;
            pn * (pn / qn).ln()
        })
        .sum();
    Ok(kl)
}

/// Fisher–Pearson moment coefficient `g1 = m3 / m2^(3/2)` with central
/// moments normalized by `n`.
pub fn skewness(samples: &[f64]) -> Result<f64, StatsError> {
    let n = samples.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let (m2, m3) = samples.iter().fold((0.0, 0.0), |(m2, m3), x| {
        let d = x - mean;
        (m2 + d * d, m3 + d * d * d)
    });
    let (m2, m3) = (m2 / n as f64, m3 / n as f64);
    if m2 <= f64::EPSILON * mean.abs().max(1.0).powi(2) {
        return Err(StatsError::ZeroVariance);
    }
    Ok(m3 / m2.powf(1.5))
}

/// Histogram of online degrees over online vertices.
pub fn degree_histogram(snap: &OnlineSnapshot) -> Result<Histogram, StatsError> {
    if snap.online.is_empty() {
        return Err(StatsError::NoOnlineVertices);
    }
    Ok(Histogram::from_values(snap.online_degree.iter().copied()))
}

/// Histogram of degrees over all vertices of a static graph.
pub fn graph_degree_histogram(g: &Graph) -> Histogram {
    Histogram::from_values(g.degrees())
}

/// Average local clustering: mean over vertices of the fraction of neighbor
/// pairs that are adjacent, with 0 for vertices of degree below 2.
pub fn clustering_coefficient(g: &Graph) -> Result<f64, StatsError> {
    if g.n_edges() == 0 {
        return Err(StatsError::Degenerate("clustering needs at least one edge"));
    }
    let n = g.n_vertices();
    let mut mark = vec![false; n];
    let mut total = 0.0;
    for v in 0..n {
        let nbrs = g.adj(v);
        let d = nbrs.len();
        if d < 2 {
            continue;
        }
        for &u in nbrs {
            mark[u] = true;
        }
        let mut links = 0usize;
        for &u in nbrs {
            links += g.adj(u).iter().filter(|&&w| w > u && mark[w]).count();
        }
        for &u in nbrs {
            mark[u] = false;
        }
        total += 2.0 * links as f64 / (d * (d - 1)) as f64;
    }
    Ok(total / n as f64)
}

/// `2E / N`.
pub fn mean_degree(g: &Graph) -> Result<f64, StatsError> {
    if g.n_vertices() == 0 {
        return Err(StatsError::Degenerate("mean degree of an empty graph"));
    }
    Ok(2.0 * g.n_edges() as f64 / g.n_vertices() as f64)
}

/// Degree assortativity: Pearson correlation of the degrees at either end
/// of each edge, counting both orientations.
pub fn assortativity(g: &Graph) -> Result<f64, StatsError> {
    if g.n_edges() == 0 {
        return Err(StatsError::Degenerate("assortativity needs at least one edge"));
    }
    let (mut s_prod, mut s_mean, mut s_sq) = (0.0, 0.0, 0.0);
    for (u, v) in g.edges() {
        let (a, b) = (g.adj(u).len() as f64, g.adj(v).len() as f64);
        s_prod += a * b;
        s_mean += 0.5 * (a + b);
        s_sq += 0.5 * (a * a + b * b);
    }
    let m = g.n_edges() as f64;
    let mean = s_mean / m;
    let num = s_prod / m - mean * mean;
    let den = s_sq / m - mean * mean;
    if den.abs() <= f64::EPSILON * (s_sq / m) {
        return Err(StatsError::Degenerate("assortativity needs nonzero degree variance across edges"));
    }
    Ok(num / den)
}

/// Mean of `|observed - predicted|`.
pub fn mean_absolute_error(observed: &[f64], predicted: &[f64]) -> Result<f64, StatsError> {
    if observed.len() != predicted.len() {
        return Err(StatsError::LengthMismatch(observed.len(), predicted.len()));
    }
    if observed.is_empty() {
        return Err(StatsError::Degenerate("mean absolute error of empty lists"));
    }
    Ok(observed.iter().zip(predicted).map(|(o, p)| (o - p).abs()).sum::<f64>() / observed.len() as f64)
}

/// One row of a model comparison, columns as in the fitting report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(rename = "KL")]
    pub kl: Option<f64>,
    #[serde(rename = "Clustering")]
    pub clustering: f64,
    #[serde(rename = "Mean degree")]
    pub mean_degree: f64,
    #[serde(rename = "Assortativity")]
    pub assortativity: f64,
    #[serde(rename = "Skewness")]
    pub skewness: f64,
}

impl FitReport {
    /// Topology metrics of `g` with degree skewness over all vertices; `kl` unset.
    pub fn for_graph(g: &Graph) -> Result<Self, StatsError> {
        let degrees: Vec<f64> = g.degrees().map(|d| d as f64).collect();
        Ok(Self {
            kl: None,
            clustering: clustering_coefficient(g)?,
            mean_degree: mean_degree(g)?,
            assortativity: assortativity(g)?,
            skewness: skewness(&degrees)?,
        })
    }
}
