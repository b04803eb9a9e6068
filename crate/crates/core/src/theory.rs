//! Stationary theory of the online-count birth–death chain.
//!
//! With `n0` vertices each flipping independently (hidden to online at rate
//! `lambda`, online to hidden at rate `mu`), the number of online vertices is
//! a birth–death chain on `{0, ..., n0}` with birth rate `(n0 - m) * lambda`
//! and death rate `m * mu`. Its stationary law is binomial with success
//! probability `r / (1 + r)`, `r = lambda / mu`:
//!
//! ```text
//! pi_n = C(n0, n) r^n / (1 + r)^n0
//! ```
//!
//! The same formulas describe the online-neighbor count of a single vertex
//! with `n0 = k_i(0)`, its initial degree.
//!
//! [`solve_stationary`] recovers the same vector from the rate matrix alone
//! and serves as an independent check of the closed form.

use std::io::{self, Write};

use thiserror::Error;

/// Largest `n0` for which [`rate_matrix`] materializes the dense matrix.
pub const DEFAULT_MATRIX_CAP: u64 = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("invalid rates: lambda={lambda}, mu={mu} (both must be positive and finite)")]
    InvalidRates { lambda: f64, mu: f64 },
    #[error("state {n} outside 0..={n0}")]
    Domain { n: u64, n0: u64 },
    #[error("rate matrix for n0={n0} exceeds the materialization cap {cap}")]
    Capacity { n0: u64, cap: u64 },
    #[error("rate matrix is not an irreducible birth-death generator: {0}")]
    NotIrreducible(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    /// Initial population: `N(0)` for network size, `k_i(0)` for a vertex's neighborhood.
    pub n0: u64,
    pub lambda: f64,
    pub mu: f64,
}

impl TheoryParams {
    pub fn new(n0: u64, lambda: f64, mu: f64) -> Result<Self, TheoryError> {
        let ok = |r: f64| r > 0.0 && r.is_finite();
        if ok(lambda) && ok(mu) {
            Ok(Self { n0, lambda, mu })
        } else {
            Err(TheoryError::InvalidRates { lambda, mu })
        }
    }

    /// `lambda / mu`, the only rate combination the stationary law depends on.
    pub fn ratio(&self) -> f64 {
        self.lambda / self.mu
    }
}

/// Probability vector over `0..=n0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPmf {
    probs: Vec<f64>,
}

impl StationaryPmf {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn n0(&self) -> u64 {
        self.probs.len() as u64 - 1
    }

    /// Smallest state with maximal probability.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (n, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = n;
            }
        }
        best
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs.iter().enumerate().map(|(n, p)| (n as f64 - mean).powi(2) * p).sum()
    }

    /// CSV with header `n,prob,log_prob`. `log_prob` is `ln(prob)`, so it is
    /// `-inf` for states that underflowed; use [`write_pmf_csv`] for exact
    /// log values of the closed form.
    pub fn write_csv<W: Write>(&self, writer: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "prob", "log_prob"])?;
        for (n, &p) in self.probs.iter().enumerate() {
            w.write_record([n.to_string(), p.to_string(), p.ln().to_string()])?;
        }
        w.flush()
    }
}

fn ln_choose(n0: u64, n: u64) -> f64 {
    let (n0, n) = (n0 as f64, n as f64);
    libm::lgamma(n0 + 1.0) - libm::lgamma(n + 1.0) - libm::lgamma(n0 - n + 1.0)
}

/// `ln pi_n = ln C(n0, n) + n ln r - n0 ln(1 + r)`.
///
/// Finite for every `n` in range, including when `pi_n` itself is below the
/// smallest representable double.
pub fn log_stationary_pmf(p: &TheoryParams, n: u64) -> Result<f64, TheoryError> {
    if n > p.n0 {
        return Err(TheoryError::Domain { n, n0: p.n0 });
    }
    let r = p.ratio();
    let choose = if n == 0 || n == p.n0 { 0.0 } else { ln_choose(p.n0, n) };
    Ok(choose + n as f64 * r.ln() - p.n0 as f64 * r.ln_1p())
}

/// Closed-form stationary distribution, evaluated in log space and
/// renormalized. States below the subnormal floor come out as exactly 0.
pub fn stationary_pmf(p: &TheoryParams) -> StationaryPmf {
    let logs: Vec<f64> = (0..=p.n0)
        .map(|n| log_stationary_pmf(p, n).expect("n within range"))
        .collect();
    StationaryPmf { probs: normalize_from_logs(&logs) }
}

fn normalize_from_logs(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    for x in &mut probs {
        *x /= total;
    }
    probs
}

/// `E[N] = n0 r / (1 + r)`.
pub fn expected_size(p: &TheoryParams) -> f64 {
    let r = p.ratio();
    p.n0 as f64 * r / (1.0 + r)
}

/// `D[N] = n0 r / (1 + r)^2`.
pub fn variance_size(p: &TheoryParams) -> f64 {
    let r = p.ratio();
    p.n0 as f64 * r / ((1.0 + r) * (1.0 + r))
}

/// Probability that a vertex with initial degree `n0` currently has no
/// online neighbor: `(1 + r)^(-n0)`.
pub fn isolation_probability(p: &TheoryParams) -> f64 {
    (-(p.n0 as f64) * p.ratio().ln_1p()).exp()
}

/// Dense generator of the online-count chain, row-major.
///
/// Off-diagonal entries are the transition rates; each diagonal entry is the
/// negated sum of its row, so rows sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl RateMatrix {
    /// Wraps a row-major square matrix.
    pub fn from_dense(dim: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), dim * dim, "expected a {dim}x{dim} matrix");
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.dim + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.dim..(from + 1) * self.dim]
    }

    /// Dense CSV, one matrix row per line, no header.
    pub fn write_csv<W: Write>(&self, writer: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for m in 0..self.dim {
            w.write_record(self.row(m).iter().map(f64::to_string))?;
        }
        w.flush()
    }
}

pub fn rate_matrix(p: &TheoryParams) -> Result<RateMatrix, TheoryError> {
    rate_matrix_with_cap(p, DEFAULT_MATRIX_CAP)
}

/// `q[m][m+1] = (n0 - m) lambda`, `q[m][m-1] = m mu`, zero beyond the
/// first off-diagonals.
pub fn rate_matrix_with_cap(p: &TheoryParams, cap: u64) -> Result<RateMatrix, TheoryError> {
    if p.n0 > cap {
        return Err(TheoryError::Capacity { n0: p.n0, cap });
    }
    let dim = p.n0 as usize + 1;
    let mut entries = vec![0.0; dim * dim];
    for m in 0..dim {
        let up = (p.n0 - m as u64) as f64 * p.lambda;
        let down = m as f64 * p.mu;
        if m + 1 < dim {
            entries[m * dim + m + 1] = up;
        }
        if m > 0 {
            entries[m * dim + m - 1] = down;
        }
        entries[m * dim + m] = -(up + down);
    }
    Ok(RateMatrix { dim, entries })
}

/// Solves `pi Q = 0`, `sum pi = 1` for a birth–death generator by detailed
/// balance: `pi[n+1] = pi[n] * q[n][n+1] / q[n+1][n]`, accumulated in log space.
pub fn solve_stationary(q: &RateMatrix) -> Result<StationaryPmf, TheoryError> {
    let dim = q.dim();
    if dim == 0 {
        return Err(TheoryError::NotIrreducible("empty state space".into()));
    }
    for m in 0..dim {
        for n in 0..dim {
            if m.abs_diff(n) >= 2 && q.get(m, n) != 0.0 {
                return Err(TheoryError::NotIrreducible(format!("q[{m}][{n}] = {} is not tridiagonal", q.get(m, n))));
            }
        }
    }
    let mut logs = Vec::with_capacity(dim);
    logs.push(0.0);
    for n in 0..dim - 1 {
        let (up, down) = (q.get(n, n + 1), q.get(n + 1, n));
        if !(up > 0.0 && down > 0.0) {
            return Err(TheoryError::NotIrreducible(format!(
                "zero rate between states {n} and {}",
                n + 1
            )));
        }
        logs.push(logs[n] + up.ln() - down.ln());
    }
    Ok(StationaryPmf { probs: normalize_from_logs(&logs) })
}

/// CSV `n,prob,log_prob` of the closed form, with exact log values even
/// where `prob` underflows to 0.
pub fn write_pmf_csv<W: Write>(p: &TheoryParams, writer: W) -> io::Result<()> {
    let pmf = stationary_pmf(p);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "prob", "log_prob"])?;
    for (n, &prob) in pmf.probs().iter().enumerate() {
        let log = log_stationary_pmf(p, n as u64).expect("n within range");
        w.write_record([n.to_string(), prob.to_string(), log.to_string()])?;
    }
    w.flush()
}

/// Row of the PMF CSV.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
pub struct PmfRow {
    pub n: u64,
    pub prob: f64,
    pub log_prob: f64,
}

pub fn read_pmf_csv<R: io::Read>(reader: R) -> Result<Vec<PmfRow>, csv::Error> {
    csv::Reader::from_reader(reader).deserialize().collect()
}
