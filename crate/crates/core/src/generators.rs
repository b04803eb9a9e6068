//! Initial topologies: Barabási–Albert, Watts–Strogatz and lognormal-increment
//! growth (NVE), plus edge lists from disk.
//!
//! Every generator draws from [`crate::rng::SimRng`] seeded with the caller's
//! seed, so the same arguments always produce the same adjacency.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::graph::{load_edge_list, Graph, GraphError};
use crate::rng::{seeded, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    /// Barabási–Albert growth, `m` preferential edges per arriving vertex.
    ScaleFree { m: usize },
    /// Watts–Strogatz ring with `k` neighbors per vertex, rewiring probability `p`.
    SmallWorld { k: usize, p: f64 },
    /// Preferential growth with lognormally distributed edge increments.
    Nve { mu: f64, sigma: f64 },
    EdgeList(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Ignored for [`GeneratorKind::EdgeList`].
    pub n_vertices: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn scale_free(n_vertices: usize, m: usize, seed: u64) -> Self {
        Self { kind: GeneratorKind::ScaleFree { m }, n_vertices, seed }
    }

    pub fn small_world(n_vertices: usize, k: usize, p: f64, seed: u64) -> Self {
        Self { kind: GeneratorKind::SmallWorld { k, p }, n_vertices, seed }
    }

    pub fn nve(n_vertices: usize, mu: f64, sigma: f64, seed: u64) -> Self {
        Self { kind: GeneratorKind::Nve { mu, sigma }, n_vertices, seed }
    }

    pub fn edge_list(path: impl Into<PathBuf>) -> Self {
        Self { kind: GeneratorKind::EdgeList(path.into()), n_vertices: 0, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.n_vertices;
        match self.kind {
            GeneratorKind::ScaleFree { m } => check_scale_free(n, m),
            GeneratorKind::SmallWorld { k, p } => check_small_world(n, k, p),
            GeneratorKind::Nve { mu, sigma } => check_nve(n, mu, sigma),
            GeneratorKind::EdgeList(_) => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Graph, GraphError> {
        let n = self.n_vertices;
        match &self.kind {
            GeneratorKind::ScaleFree { m } => generate_scale_free(n, *m, self.seed),
            GeneratorKind::SmallWorld { k, p } => generate_small_world(n, *k, *p, self.seed),
            GeneratorKind::Nve { mu, sigma } => generate_nve(n, *mu, *sigma, self.seed),
            GeneratorKind::EdgeList(path) => load_edge_list(path),
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GeneratorKind::ScaleFree { m } => write!(f, "SF(n={}, m={m})", self.n_vertices),
            GeneratorKind::SmallWorld { k, p } => {
                write!(f, "SW(n={}, K={k}, p={p})", self.n_vertices)
            }
            GeneratorKind::Nve { mu, sigma } => {
                write!(f, "NVE(n={}, mu={mu}, sigma={sigma})", self.n_vertices)
            }
            GeneratorKind::EdgeList(path) => write!(f, "edges({})", path.display()),
        }
    }
}

fn invalid(msg: String) -> GraphError {
    GraphError::InvalidParameter(msg)
}

fn check_scale_free(n: usize, m: usize) -> Result<(), GraphError> {
    if m < 1 || m >= n {
        return Err(invalid(format!("scale-free needs 1 <= m < n, got m={m}, n={n}")));
    }
    Ok(())
}

fn check_small_world(n: usize, k: usize, p: f64) -> Result<(), GraphError> {
    if !k.is_multiple_of(2) {
        return Err(invalid(format!("small-world K must be even, got K={k}")));
    }
    if k < 2 || k >= n {
        return Err(invalid(format!("small-world needs 2 <= K < n, got K={k}, n={n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("rewiring probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_nve(n: usize, mu: f64, sigma: f64) -> Result<(), GraphError> {
    if n < 2 {
        return Err(invalid(format!("NVE needs at least 2 vertices, got {n}")));
    }
    if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("NVE needs finite mu and sigma > 0, got mu={mu}, sigma={sigma}")));
    }
    Ok(())
}

/// Picks `count` distinct vertices among `0..existing`, each draw
/// proportional to degree. `endpoints` holds every edge endpoint once, so a
/// uniform index into it is a degree-weighted vertex.
fn preferential_targets(
    rng: &mut SimRng,
    endpoints: &[usize],
    existing: usize,
    count: usize,
    out: &mut Vec<usize>,
) {
    out.clear();
    if count >= existing {
        out.extend(0..existing);
        return;
    }
    while out.len() < count {
        let v = if endpoints.is_empty() {
            rng.gen_range(0..existing)
        } else {
            endpoints[rng.gen_range(0..endpoints.len())]
        };
        if !out.contains(&v) {
            out.push(v);
        }
    }
}

/// Barabási–Albert preferential attachment.
///
/// Seed: a star on the first `m` vertices with center 0 (`m - 1` edges). Each
/// later vertex attaches to `m` distinct existing vertices chosen with
/// probability proportional to degree, so the graph has
/// `m * (n - m) + m - 1` edges.
pub fn generate_scale_free(n: usize, m: usize, seed: u64) -> Result<Graph, GraphError> {
    check_scale_free(n, m)?;
    let mut rng = seeded(seed);
    let mut edges = Vec::with_capacity(m * (n - m) + m);
    let mut endpoints = Vec::with_capacity(2 * edges.capacity());
    for leaf in 1..m {
        edges.push((0, leaf));
        endpoints.extend([0, leaf]);
    }
    let mut targets = Vec::with_capacity(m);
    for source in m..n {
        preferential_targets(&mut rng, &endpoints, source, m, &mut targets);
        for &t in &targets {
            edges.push((source, t));
            endpoints.extend([source, t]);
        }
    }
    Graph::from_edges(n, edges)
}

/// Watts–Strogatz small world.
///
/// Starts from the ring where each vertex links to `k / 2` neighbors on each
/// side. Then for each offset `j = 1..=k/2` and each vertex `u` in order, the
/// clockwise edge `(u, u + j)` is rewired with probability `p` to a uniform
/// target that is neither `u` nor already adjacent to `u`. The edge count
/// `n * k / 2` is preserved.
pub fn generate_small_world(n: usize, k: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    check_small_world(n, k, p)?;
    let mut rng = seeded(seed);
    let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adjacency[u].insert(v);
            adjacency[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            if rng.gen::<f64>() >= p {
                continue;
            }
            if adjacency[u].len() >= n - 1 {
                continue;
            }
            let v = (u + j) % n;
            let mut w = rng.gen_range(0..n);
            while w == u || adjacency[u].contains(&w) {
                w = rng.gen_range(0..n);
            }
            adjacency[u].remove(&v);
            adjacency[v].remove(&u);
            adjacency[u].insert(w);
            adjacency[w].insert(u);
        }
    }
    let edges = adjacency
        .iter()
        .enumerate()
        .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
        .collect::<Vec<_>>();
    Graph::from_edges(n, edges)
}

/// Growth with lognormal edge increments.
///
/// Starts from a single vertex. Vertex `v` (arriving when the graph has `v`
/// vertices) draws `x ~ LogNormal(mu, sigma)` and attaches preferentially to
/// `c` distinct vertices, where `c` is `x` rounded half-up and clamped to
/// `[1, v]`.
pub fn generate_nve(n: usize, mu: f64, sigma: f64, seed: u64) -> Result<Graph, GraphError> {
    check_nve(n, mu, sigma)?;
    let increments = LogNormal::new(mu, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    let mut endpoints = Vec::new();
    let mut targets = Vec::new();
    for source in 1..n {
        let x: f64 = increments.sample(&mut rng);
        let count = ((x + 0.5).floor().max(1.0) as usize).min(source);
        preferential_targets(&mut rng, &endpoints, source, count, &mut targets);
        for &t in &targets {
            edges.push((source, t));
            endpoints.extend([source, t]);
        }
    }
    Graph::from_edges(n, edges)
}
