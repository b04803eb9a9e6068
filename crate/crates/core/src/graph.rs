//! Immutable undirected simple graphs and edge-list I/O.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge list contains no edges")]
    Empty,
    #[error("vertex {vertex} out of range (graph has {n_vertices} vertices)")]
    VertexOutOfRange { vertex: usize, n_vertices: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Undirected simple graph on vertices `0..n_vertices`.
///
/// Neighbor lists are sorted ascending and contain neither self-loops nor
/// duplicates. Graphs never change after construction, so a single instance
/// can back any number of concurrent simulations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    n_edges: usize,
    original_ids: Option<Vec<u64>>,
}

impl Graph {
    /// Builds a graph from an edge iterator. Self-loops and repeated edges
    /// (in either orientation) are dropped.
    pub fn from_edges<I>(n_vertices: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); n_vertices];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n_vertices {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n_vertices });
                }
            }
            if u == v {
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(Self::from_raw_adjacency(adjacency))
    }

    fn from_raw_adjacency(mut adjacency: Vec<Vec<usize>>) -> Self {
        let mut degree_sum = 0;
        for (v, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            nbrs.dedup();
            nbrs.retain(|&u| u != v);
            degree_sum += nbrs.len();
        }
        Self { adjacency, n_edges: degree_sum / 2, original_ids: None }
    }

    pub fn n_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn degree(&self, v: usize) -> Result<usize, GraphError> {
        self.neighbors(v).map(<[usize]>::len)
    }

    pub fn neighbors(&self, v: usize) -> Result<&[usize], GraphError> {
        self.adjacency
            .get(v)
            .map(Vec::as_slice)
            .ok_or(GraphError::VertexOutOfRange { vertex: v, n_vertices: self.n_vertices() })
    }

    /// Unchecked neighbor access for hot loops; panics when `v` is out of range.
    #[inline]
    pub fn adj(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.iter().map(Vec::len)
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().max().unwrap_or(0)
    }

    /// Edges as `(u, v)` pairs with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Ids from the source file when the graph came from an edge list.
    /// `original_ids()[v]` is the id that was relabeled to `v`.
    pub fn original_ids(&self) -> Option<&[u64]> {
        self.original_ids.as_deref()
    }

    /// Subgraph induced by `vertices`, relabeled to `0..vertices.len()` in the
    /// given order. `vertices` must be sorted ascending and duplicate free.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Graph {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        let mut position = vec![usize::MAX; self.n_vertices()];
        for (i, &v) in vertices.iter().enumerate() {
            position[v] = i;
        }
        let adjacency = vertices
            .iter()
            .map(|&v| {
                self.adjacency[v]
                    .iter()
                    .filter_map(|&u| (position[u] != usize::MAX).then_some(position[u]))
                    .collect::<Vec<_>>()
            })
            .collect();
        Self::from_raw_adjacency(adjacency)
    }

    /// Writes the canonical edge list: one `u v` line per edge, `u < v`, sorted.
    pub fn write_edge_list<W: Write>(&self, writer: W) -> io::Result<()> {
        let mut w = BufWriter::new(writer);
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        w.flush()
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write_edge_list(File::create(path)?)
    }
}

/// Parses a whitespace-separated edge list.
///
/// Lines that are blank or start with `#` (SNAP) or `%` (KONECT) are skipped.
/// Each remaining line needs at least two non-negative integer ids; extra
/// columns such as weights or timestamps are ignored. Vertices are relabeled
/// densely in order of first appearance.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Graph, GraphError> {
    let mut relabel: HashMap<u64, usize> = HashMap::new();
    let mut original_ids = Vec::new();
    let mut edges = Vec::new();

    let mut dense_id = |raw: u64, original_ids: &mut Vec<u64>| {
        *relabel.entry(raw).or_insert_with(|| {
            original_ids.push(raw);
            original_ids.len() - 1
        })
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let mut next_id = || -> Result<u64, GraphError> {
            let field = fields.next().ok_or_else(|| GraphError::Parse {
                line: idx + 1,
                message: "expected two vertex ids".into(),
            })?;
            field.parse::<u64>().map_err(|e| GraphError::Parse {
                line: idx + 1,
                message: format!("invalid vertex id {field:?}: {e}"),
            })
        };
        let (a, b) = (next_id()?, next_id()?);
        let u = dense_id(a, &mut original_ids);
        let v = dense_id(b, &mut original_ids);
        edges.push((u, v));
    }

    if edges.is_empty() {
        return Err(GraphError::Empty);
    }
    let mut graph = Graph::from_edges(original_ids.len(), edges)?;
    graph.original_ids = Some(original_ids);
    Ok(graph)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    read_edge_list(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Graph, GraphError> {
        read_edge_list(text.as_bytes())
    }

    #[test]
    fn minimal_path() {
        let g = parse("0 1\n1 2").unwrap();
        assert_eq!(g.n_vertices(), 3);
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.neighbors(1).unwrap(), &[0, 2]);
    }

    #[test]
    fn duplicate_reversed_edge_is_dropped() {
        let g = parse("0 1\n1 0").unwrap();
        assert_eq!(g.n_vertices(), 2);
        assert_eq!(g.n_edges(), 1);
    }

    #[test]
    fn self_loops_and_comments_are_skipped() {
        let g = parse("# header\n% konect\n\n5 5\n5 9\n").unwrap();
        assert_eq!(g.n_vertices(), 2);
        assert_eq!(g.n_edges(), 1);
    }

    #[test]
    fn relabels_in_first_appearance_order() {
        let g = parse("100 7\n7 42\n").unwrap();
        assert_eq!(g.original_ids().unwrap(), &[100, 7, 42]);
        assert_eq!(g.neighbors(1).unwrap(), &[0, 2]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("0 1\n# c\n2 x\n") {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("0 1\n3\n"), Err(GraphError::Parse { line: 2, .. })));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse(""), Err(GraphError::Empty)));
        assert!(matches!(parse("# only comments\n"), Err(GraphError::Empty)));
    }

    #[test]
    fn out_of_range_vertex() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert!(matches!(g.degree(2), Err(GraphError::VertexOutOfRange { vertex: 2, .. })));
        assert!(Graph::from_edges(2, [(0, 2)]).is_err());
    }

    #[test]
    fn star_center_degree() {
        let g = Graph::from_edges(6, (1..6).map(|v| (0, v))).unwrap();
        assert_eq!(g.degree(0).unwrap(), 5);
        assert_eq!(g.n_edges(), 5);
    }

    #[test]
    fn induced_subgraph_keeps_only_internal_edges() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let sub = g.induced_subgraph(&[0, 1, 3]);
        assert_eq!(sub.n_vertices(), 3);
        assert_eq!(sub.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn canonical_writer_roundtrip() {
        let g = Graph::from_edges(4, [(3, 1), (0, 2), (2, 0), (0, 1)]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0 1\n0 2\n1 3\n");
        let back = read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }
}
