//! Undirected graph instances and the DIMACS-like input format.
//!
//! ```text
//! c optional comments
//! p edge <n> <m>
//! e <i> <j>        (m lines, order significant)
//! k <int>          (optional threshold, may be overridden)
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Simple undirected graph with ordered edges. Vertices are 1-based;
/// each edge is stored with its endpoints normalized to `i < j`, in the
/// order the edges were given.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: u32,
    pub edges: Vec<(u32, u32)>,
}

impl Graph {
    pub fn new(n: u32, edges: Vec<(u32, u32)>) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewVertices(n));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if a < 1 || a > n || b < 1 || b > n {
                return Err(GraphError::VertexOutOfRange { v: a.max(b), n });
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
            normalized.push(e);
        }
        Ok(Graph {
            n,
            edges: normalized,
        })
    }

    pub fn s(&self) -> u32 {
        self.edges.len() as u32
    }

    /// Edge indices (1-based) incident to vertex `v`, ascending.
    pub fn incident_edges(&self, v: u32) -> Vec<u32> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a == v || b == v)
            .map(|(idx, _)| idx as u32 + 1)
            .collect()
    }
}

/// A decision-problem instance: graph plus threshold `k`, `1 ≤ k < n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub graph: Graph,
    pub k: u32,
}

impl Instance {
    pub fn new(graph: Graph, k: u32) -> Result<Self, GraphError> {
        if k < 1 || k >= graph.n {
            return Err(GraphError::ThresholdOutOfRange { k, n: graph.n });
        }
        Ok(Instance { graph, k })
    }

    pub fn n(&self) -> u32 {
        self.graph.n
    }

    pub fn s(&self) -> u32 {
        self.graph.s()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("need at least 2 vertices, got {0}")]
    TooFewVertices(u32),
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("vertex {v} out of range 1..={n}")]
    VertexOutOfRange { v: u32, n: u32 },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("threshold k={k} out of range [1, {}] for n={n}", n - 1)]
    ThresholdOutOfRange { k: u32, n: u32 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing `p edge <n> <m>` header")]
    MissingHeader,
    #[error("expected {expected} edges, found {found}")]
    EdgeCountMismatch { expected: usize, found: usize },
}

/// Parsed file: the graph and the threshold from the optional `k` line.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedGraph {
    pub graph: Graph,
    pub k: Option<u32>,
}

pub fn parse_graph(text: &str) -> Result<ParsedGraph, GraphError> {
    let mut header: Option<(u32, usize)> = None;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut k: Option<u32> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let err = |msg: &str| GraphError::Parse {
            line,
            msg: msg.to_string(),
        };
        match fields.first() {
            None => continue,
            Some(&"c") => continue,
            Some(&"p") => {
                if header.is_some() {
                    return Err(err("duplicate header"));
                }
                if fields.len() != 4 || fields[1] != "edge" {
                    return Err(err("expected `p edge <n> <m>`"));
                }
                let n: u32 = fields[2].parse().map_err(|_| err("bad vertex count"))?;
                let m: usize = fields[3].parse().map_err(|_| err("bad edge count"))?;
                header = Some((n, m));
            }
            Some(&"e") => {
                if header.is_none() {
                    return Err(GraphError::MissingHeader);
                }
                if fields.len() != 3 {
                    return Err(err("expected `e <i> <j>`"));
                }
                let a: u32 = fields[1].parse().map_err(|_| err("bad endpoint"))?;
                let b: u32 = fields[2].parse().map_err(|_| err("bad endpoint"))?;
                edges.push((a, b));
            }
            Some(&"k") => {
                if fields.len() != 2 {
                    return Err(err("expected `k <int>`"));
                }
                k = Some(fields[1].parse().map_err(|_| err("bad threshold"))?);
            }
            Some(other) => {
                return Err(err(&format!("unknown line tag `{other}`")));
            }
        }
    }

    let (n, m) = header.ok_or(GraphError::MissingHeader)?;
    if edges.len() != m {
        return Err(GraphError::EdgeCountMismatch {
            expected: m,
            found: edges.len(),
        });
    }
    Ok(ParsedGraph {
        graph: Graph::new(n, edges)?,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_path_graph() {
        let p = parse_graph("c a path\np edge 4 3\ne 1 2\ne 2 3\ne 3 4\nk 2\n").unwrap();
        assert_eq!(p.graph.n, 4);
        assert_eq!(p.graph.edges, vec![(1, 2), (2, 3), (3, 4)]);
        assert_eq!(p.k, Some(2));
        let inst = Instance::new(p.graph, p.k.unwrap()).unwrap();
        assert_eq!(inst.s(), 3);
    }

    #[test]
    fn parses_edgeless_graph() {
        let p = parse_graph("p edge 2 0\nk 1\n").unwrap();
        assert_eq!(p.graph.n, 2);
        assert_eq!(p.graph.s(), 0);
    }

    #[test]
    fn rejects_self_loop() {
        let e = parse_graph("p edge 3 1\ne 1 1\n").unwrap_err();
        assert_eq!(e, GraphError::SelfLoop(1));
    }

    #[test]
    fn rejects_duplicate_edge_any_orientation() {
        let e = parse_graph("p edge 3 2\ne 1 2\ne 2 1\n").unwrap_err();
        assert_eq!(e, GraphError::DuplicateEdge(1, 2));
    }

    #[test]
    fn rejects_k_out_of_range() {
        let p = parse_graph("p edge 3 0\nk 3\n").unwrap();
        let e = Instance::new(p.graph, 3).unwrap_err();
        assert!(matches!(e, GraphError::ThresholdOutOfRange { .. }));
    }

    #[test]
    fn rejects_missing_header() {
        assert_eq!(parse_graph("e 1 2\n").unwrap_err(), GraphError::MissingHeader);
    }

    #[test]
    fn incident_edges_ascend_by_edge_index() {
        let g = Graph::new(4, vec![(3, 4), (1, 2), (1, 3)]).unwrap();
        assert_eq!(g.incident_edges(3), vec![1, 3]);
        assert_eq!(g.incident_edges(1), vec![2, 3]);
    }
}
