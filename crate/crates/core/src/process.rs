//! Exact event-driven simulation of online/hidden vertex dynamics.
//!
//! Every vertex carries its own exponential clock: an online vertex goes
//! hidden at rate `mu`, a hidden vertex comes back online at rate `lambda`.
//! Edges of the initial graph never change; an edge is active exactly when
//! both endpoints are online. Pending transitions sit in a binary heap keyed
//! by `(time, vertex)`, so each transition costs `O(log N)`.
//!
//! RNG consumption is fixed: initialization walks vertices in id order, and
//! every processed transition draws exactly one duration for the new phase.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::rng::{seeded, unit_open_closed, SimRng};
use crate::stats::{degree_histogram, Histogram};

#[derive(Debug, Error, PartialEq)]
pub enum ProcessError {
    #[error("invalid rates: lambda={lambda}, mu={mu} (both must be positive and finite)")]
    InvalidRates { lambda: f64, mu: f64 },
    #[error("initial online fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("cannot move the clock back from {clock} to {requested}")]
    TimeOrdering { clock: f64, requested: f64 },
    #[error("observation times must be ascending and finite (index {index})")]
    UnorderedObservations { index: usize },
}

/// Transition rates. `lambda` takes a hidden vertex online, `mu` takes an
/// online vertex hidden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NohParams {
    pub lambda: f64,
    pub mu: f64,
}

impl NohParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self, ProcessError> {
        let ok = |r: f64| r > 0.0 && r.is_finite();
        if ok(lambda) && ok(mu) {
            Ok(Self { lambda, mu })
        } else {
            Err(ProcessError::InvalidRates { lambda, mu })
        }
    }

    /// Long-run probability that a given vertex is online.
    pub fn online_probability(&self) -> f64 {
        self.lambda / (self.lambda + self.mu)
    }

    /// Rate leaving `phase`.
    pub fn exit_rate(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Online => self.mu,
            Phase::Hidden => self.lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Online,
    Hidden,
}

impl Phase {
    pub fn flipped(self) -> Self {
        match self {
            Phase::Online => Phase::Hidden,
            Phase::Hidden => Phase::Online,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialOnline {
    All,
    /// Each vertex starts online independently with this probability.
    Fraction(f64),
}

/// Holding time of `phase`: exponential with the phase's exit rate, drawn by
/// inverse CDF as `-ln(U) / rate` with `U` in `(0, 1]`.
///
/// `U = 1` would give a zero-length phase; it is mapped to the smallest
/// positive double so durations are always strictly positive.
pub fn sample_duration<R: RngCore + ?Sized>(phase: Phase, params: &NohParams, rng: &mut R) -> f64 {
    let d = -unit_open_closed(rng).ln() / params.exit_rate(phase);
    if d > 0.0 {
        d
    } else {
        f64::MIN_POSITIVE
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    vertex: u32,
}

// Reversed so BinaryHeap pops the earliest event, lowest vertex id first.
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

/// A processed phase change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub time: f64,
    pub vertex: usize,
    /// Phase entered at `time`.
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexState {
    pub phase: Phase,
    pub next_transition: f64,
}

/// Simulation state over a borrowed, immutable graph.
#[derive(Debug, Clone)]
pub struct NohProcess<'g> {
    graph: &'g Graph,
    params: NohParams,
    clock: f64,
    phase: Vec<Phase>,
    next_transition: Vec<f64>,
    queue: BinaryHeap<Pending>,
    rng: SimRng,
    online_count: usize,
    transitions: u64,
}

impl<'g> NohProcess<'g> {
    pub fn new(
        graph: &'g Graph,
        params: NohParams,
        seed: u64,
        initial: InitialOnline,
    ) -> Result<Self, ProcessError> {
        let params = NohParams::new(params.lambda, params.mu)?;
        if let InitialOnline::Fraction(q) = initial {
            if !(0.0..=1.0).contains(&q) {
                return Err(ProcessError::InvalidFraction(q));
            }
        }
        assert!(graph.n_vertices() <= u32::MAX as usize, "graph too large for u32 vertex ids");

        let n = graph.n_vertices();
        let mut rng = seeded(seed);
        let mut phase = Vec::with_capacity(n);
        let mut next_transition = Vec::with_capacity(n);
        let mut queue = Vec::with_capacity(n);
        for v in 0..n {
            let p = match initial {
                InitialOnline::All => Phase::Online,
                InitialOnline::Fraction(q) => {
                    if unit_open_closed(&mut rng) <= q {
                        Phase::Online
                    } else {
                        Phase::Hidden
                    }
                }
            };
            let t = sample_duration(p, &params, &mut rng);
            phase.push(p);
            next_transition.push(t);
            queue.push(Pending { time: t, vertex: v as u32 });
        }
        let online_count = phase.iter().filter(|&&p| p == Phase::Online).count();
        Ok(Self {
            graph,
            params,
            clock: 0.0,
            phase,
            next_transition,
            queue: BinaryHeap::from(queue),
            rng,
            online_count,
            transitions: 0,
        })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn params(&self) -> NohParams {
        self.params
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn online_count(&self) -> usize {
        self.online_count
    }

    /// Number of transitions processed since initialization.
    pub fn transitions(&self) -> u64 {
        self.transitions
    }

    pub fn phase(&self, v: usize) -> Phase {
        self.phase[v]
    }

    pub fn is_online(&self, v: usize) -> bool {
        self.phase[v] == Phase::Online
    }

    pub fn vertex_state(&self, v: usize) -> VertexState {
        VertexState { phase: self.phase[v], next_transition: self.next_transition[v] }
    }

    /// Full-scan count of online vertices, for checking the incremental counter.
    pub fn recount_online(&self) -> usize {
        self.phase.iter().filter(|&&p| p == Phase::Online).count()
    }

    /// Number of online neighbors of `v`, regardless of `v`'s own phase.
    pub fn online_neighbors(&self, v: usize) -> usize {
        self.graph.adj(v).iter().filter(|&&u| self.is_online(u)).count()
    }

    /// Processes every transition with time `<= t`, then sets the clock to `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<(), ProcessError> {
        self.advance_with(t, |_| {})
    }

    /// Like [`advance_to`](Self::advance_to), reporting each transition to
    /// `observer` after it is applied.
    pub fn advance_with<F>(&mut self, t: f64, mut observer: F) -> Result<(), ProcessError>
    where
        F: FnMut(&Transition),
    {
        if t.is_nan() || t < self.clock {
            return Err(ProcessError::TimeOrdering { clock: self.clock, requested: t });
        }
        while let Some(mut top) = self.queue.peek_mut() {
            if top.time > t {
                break;
            }
            let v = top.vertex as usize;
            let now = top.time;
            let entered = self.phase[v].flipped();
            self.phase[v] = entered;
            match entered {
                Phase::Online => self.online_count += 1,
                Phase::Hidden => self.online_count -= 1,
            }
            let next = now + sample_duration(entered, &self.params, &mut self.rng);
            self.next_transition[v] = next;
            // replaces the heap top in place; the sift happens when `top` drops
            top.time = next;
            drop(top);
            self.transitions += 1;
            observer(&Transition { time: now, vertex: v, phase: entered });
        }
        self.clock = t;
        Ok(())
    }

    /// Observation of the online overlay at the current clock.
    pub fn snapshot(&self) -> OnlineSnapshot {
        let mut online = Vec::with_capacity(self.online_count);
        let mut online_degree = Vec::with_capacity(self.online_count);
        let mut endpoint_sum = 0;
        for v in 0..self.phase.len() {
            if self.is_online(v) {
                let d = self.online_neighbors(v);
                online.push(v);
                online_degree.push(d);
                endpoint_sum += d;
            }
        }
        OnlineSnapshot { t: self.clock, online, online_degree, active_edges: endpoint_sum / 2 }
    }

    /// Advances through `observe_times`, recording the requested observables
    /// at each one.
    pub fn run_series(
        &mut self,
        observe_times: &[f64],
        observables: Observables,
    ) -> Result<Vec<Observation>, ProcessError> {
        check_ascending(observe_times, self.clock)?;
        let mut records = Vec::with_capacity(observe_times.len());
        for &t in observe_times {
            self.advance_to(t)?;
            let mut record = Observation { t, size: self.online_count, online_degrees: None, degree_histogram: None };
            if observables.online_degrees || observables.degree_histogram {
                let snap = self.snapshot();
                if observables.degree_histogram {
                    record.degree_histogram = degree_histogram(&snap).ok();
                }
                if observables.online_degrees {
                    record.online_degrees = Some(snap.online.into_iter().zip(snap.online_degree).collect());
                }
            }
            records.push(record);
        }
        Ok(records)
    }

    /// Online-vertex count at each of `observe_times`.
    pub fn size_series(&mut self, observe_times: &[f64]) -> Result<SizeSeries, ProcessError> {
        check_ascending(observe_times, self.clock)?;
        let mut sizes = Vec::with_capacity(observe_times.len());
        for &t in observe_times {
            self.advance_to(t)?;
            sizes.push(self.online_count);
        }
        Ok(SizeSeries { times: observe_times.to_vec(), sizes })
    }
}

fn check_ascending(times: &[f64], clock: f64) -> Result<(), ProcessError> {
    let mut prev = clock;
    for (index, &t) in times.iter().enumerate() {
        if !t.is_finite() || t < prev {
            return Err(ProcessError::UnorderedObservations { index });
        }
        prev = t;
    }
    Ok(())
}

/// Evenly spaced observation instants `t_lo, t_lo + dt, ...` up to `t_hi`
/// inclusive. Each instant is computed as `t_lo + i * dt` so rounding does
/// not accumulate.
pub fn observation_grid(t_lo: f64, t_hi: f64, interval: f64) -> Vec<f64> {
    assert!(interval > 0.0, "observation interval must be positive");
    let steps = ((t_hi - t_lo) / interval + 1e-9).floor();
    if steps < 0.0 {
        return Vec::new();
    }
    (0..=steps as usize).map(|i| t_lo + i as f64 * interval).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Observables {
    pub online_degrees: bool,
    pub degree_histogram: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: f64,
    pub size: usize,
    /// `(vertex, online_degree)` for every online vertex.
    pub online_degrees: Option<Vec<(usize, usize)>>,
    /// `None` when requested but no vertex was online.
    pub degree_histogram: Option<Histogram>,
}

/// Online overlay at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineSnapshot {
    pub t: f64,
    /// Online vertices, ascending.
    pub online: Vec<usize>,
    /// `online_degree[i]` is the number of online neighbors of `online[i]`.
    pub online_degree: Vec<usize>,
    /// Edges whose endpoints are both online.
    pub active_edges: usize,
}

#[derive(Serialize, Deserialize)]
struct SnapshotJson {
    t: f64,
    online: Vec<usize>,
    active_edges: usize,
}

impl OnlineSnapshot {
    pub fn degree_of(&self, v: usize) -> Option<usize> {
        self.online.binary_search(&v).ok().map(|i| self.online_degree[i])
    }

    /// The subgraph spanned by online vertices and active edges, relabeled
    /// to `0..online.len()`.
    pub fn overlay(&self, graph: &Graph) -> Graph {
        graph.induced_subgraph(&self.online)
    }

    /// `{"t": .., "online": [..], "active_edges": ..}`
    pub fn write_json<W: Write>(&self, writer: W) -> io::Result<()> {
        let doc = SnapshotJson { t: self.t, online: self.online.clone(), active_edges: self.active_edges };
        serde_json::to_writer(writer, &doc).map_err(io::Error::from)
    }

    /// Reads the JSON written by [`write_json`](Self::write_json). Online
    /// degrees are not part of the file and are recomputed from `graph`.
    pub fn read_json<R: io::Read>(reader: R, graph: &Graph) -> io::Result<Self> {
        let doc: SnapshotJson = serde_json::from_reader(reader).map_err(io::Error::from)?;
        let online_degree = doc
            .online
            .iter()
            .map(|&v| graph.adj(v).iter().filter(|u| doc.online.binary_search(u).is_ok()).count())
            .collect();
        Ok(Self { t: doc.t, online: doc.online, online_degree, active_edges: doc.active_edges })
    }
}

/// Online-vertex counts sampled at increasing times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SizeSeries {
    pub times: Vec<f64>,
    pub sizes: Vec<usize>,
}

impl SizeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.times.iter().copied().zip(self.sizes.iter().copied())
    }

    /// Mean size over samples with `t_lo <= t <= t_hi`.
    pub fn window_mean(&self, t_lo: f64, t_hi: f64) -> Option<f64> {
        let (sum, n) = self
            .iter()
            .filter(|&(t, _)| t >= t_lo && t <= t_hi)
            .fold((0.0, 0usize), |(s, n), (_, size)| (s + size as f64, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}
