//! Directed weighted graphs and edge-list ingestion.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A directed graph with per-edge influence probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectedGraph {
    pub nodes: usize,
    /// `(from, to, probability)` triples.
    pub edges: Vec<(usize, usize, f64)>,
}

impl DirectedGraph {
    /// Builds a graph from edges whose probabilities may be missing; missing
    /// ones get the weighted-cascade convention `p(u, v) = 1 / in-degree(v)`.
    pub fn with_weighted_cascade(nodes: usize, edges: Vec<(usize, usize, Option<f64>)>) -> Self {
        let mut in_degree = vec![0usize; nodes];
        for &(_, v, _) in &edges {
            in_degree[v] += 1;
        }
        let edges = edges
            .into_iter()
            .map(|(u, v, p)| (u, v, p.unwrap_or(1.0 / in_degree[v] as f64)))
            .collect();
        DirectedGraph { nodes, edges }
    }

    /// Out-adjacency lists `(edge_index, to, probability)`, built on demand.
    pub fn out_adjacency(&self) -> Vec<Vec<(usize, usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for (idx, &(u, v, p)) in self.edges.iter().enumerate() {
            adj[u].push((idx, v, p));
        }
        adj
    }
}

/// Parses a whitespace-separated edge-list: `u v [p]` per line, 0-based
/// integer node ids, `#` starts a comment line. Compatible with common
/// social-network snapshot dumps. Missing probabilities fall back to the
/// weighted-cascade convention.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<DirectedGraph> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_edge_list(std::io::BufReader::new(file), &path.display().to_string())
}

pub(crate) fn parse_edge_list(reader: impl BufRead, context: &str) -> Result<DirectedGraph> {
    let mut edges: Vec<(usize, usize, Option<f64>)> = Vec::new();
    let mut max_node = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse_node = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or_else(|| Error::parse(context, format!("line {}: missing node id", lineno + 1)))?
                .parse::<usize>()
                .map_err(|e| Error::parse(context, format!("line {}: {e}", lineno + 1)))
        };
        let u = parse_node(parts.next())?;
        let v = parse_node(parts.next())?;
        let p = match parts.next() {
            Some(tok) => Some(
                tok.parse::<f64>()
                    .map_err(|e| Error::parse(context, format!("line {}: {e}", lineno + 1)))?,
            ),
            None => None,
        };
        if parts.next().is_some() {
            return Err(Error::parse(context, format!("line {}: too many columns", lineno + 1)));
        }
        max_node = max_node.max(u).max(v);
        edges.push((u, v, p));
    }
    if edges.is_empty() {
        return Err(Error::parse(context, "no edges".to_string()));
    }
    Ok(DirectedGraph::with_weighted_cascade(max_node + 1, edges))
}
