//! Edge-cut, balance and move accounting for a shard assignment.
//!
//! Edge-cut is reported per edge: an edge whose endpoints sit in different
//! shards counts once, so a graph with 10 edges of which 2 cross reports
//! 0.2. Edges are undirected for this purpose and self-loops are never cut.
//!
//! Balance is `max_i |p_i| × k / |V|`: 1 when perfectly even, `k` when every
//! vertex sits in one shard. The dynamic variants replace edge and vertex
//! counts with interaction counts from a [`WindowActivity`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{InteractionGraph, VertexIndex, WindowActivity};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("assignment covers {assigned} vertices but the graph has {vertices}")]
    IncompleteAssignment { assigned: usize, vertices: usize },
    #[error("assignments cover different vertex sets ({0} vs {1})")]
    DomainMismatch(usize, usize),
}

/// Total map from vertex to shard in `[0, k)`, indexed by [`VertexIndex`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    k: usize,
    shard_of: Vec<usize>,
}

impl Assignment {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "shard count must be at least 1");
        Assignment {
            k,
            shard_of: Vec::new(),
        }
    }

    pub fn from_vec(k: usize, shard_of: Vec<usize>) -> Self {
        assert!(k >= 1, "shard count must be at least 1");
        assert!(shard_of.iter().all(|&s| s < k), "shard index out of range");
        Assignment { k, shard_of }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.shard_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shard_of.is_empty()
    }

    pub fn shard_of(&self, v: VertexIndex) -> usize {
        self.shard_of[v]
    }

    pub fn get(&self, v: VertexIndex) -> Option<usize> {
        self.shard_of.get(v).copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.shard_of
    }

    /// Assigns the next vertex index.
    pub fn push(&mut self, shard: usize) {
        assert!(shard < self.k);
        self.shard_of.push(shard);
    }

    pub fn set(&mut self, v: VertexIndex, shard: usize) {
        assert!(shard < self.k);
        self.shard_of[v] = shard;
    }

    /// Number of vertices per shard.
    pub fn shard_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &s in &self.shard_of {
            sizes[s] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Weighting<'a> {
    /// Every edge and vertex counts once.
    Static,
    /// Edges and vertices count their interactions in the given activity.
    Dynamic(&'a WindowActivity),
}

fn check_cover(graph: &InteractionGraph, a: &Assignment) -> Result<(), MetricsError> {
    if a.len() < graph.num_vertices() {
        return Err(MetricsError::IncompleteAssignment {
            assigned: a.len(),
            vertices: graph.num_vertices(),
        });
    }
    Ok(())
}

/// Fraction of edges (or of interactions, when dynamic) that cross shards.
/// Zero when there are no edges.
pub fn edge_cut(
    graph: &InteractionGraph,
    a: &Assignment,
    weighting: Weighting<'_>,
) -> Result<f64, MetricsError> {
    check_cover(graph, a)?;
    let (cut, total) = match weighting {
        Weighting::Static => {
            let cut = graph
                .undirected_edges()
                .filter(|&(u, v, _)| a.shard_of(u) != a.shard_of(v))
                .count() as u64;
            (cut, graph.num_undirected_edges() as u64)
        }
        Weighting::Dynamic(activity) => {
            let mut cut = 0;
            for (u, v, w) in activity.edge_activity() {
                if a.shard_of(u) != a.shard_of(v) {
                    cut += w;
                }
            }
            (cut, activity.total_edge_activity())
        }
    };
    Ok(if total == 0 {
        0.0
    } else {
        cut as f64 / total as f64
    })
}

/// Heaviest shard relative to the ideal share. One for an empty graph.
pub fn balance(
    graph: &InteractionGraph,
    a: &Assignment,
    weighting: Weighting<'_>,
) -> Result<f64, MetricsError> {
    check_cover(graph, a)?;
    let mut loads = vec![0u64; a.k()];
    match weighting {
        Weighting::Static => {
            for v in 0..graph.num_vertices() {
                loads[a.shard_of(v)] += 1;
            }
        }
        Weighting::Dynamic(activity) => {
            for (v, w) in activity.vertex_activity() {
                loads[a.shard_of(v)] += w;
            }
        }
    }
    Ok(balance_of_loads(&loads))
}

/// `max(loads) × k / sum(loads)`, or 1 when the sum is zero.
pub fn balance_of_loads(loads: &[u64]) -> f64 {
    let total: u64 = loads.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let max = loads.iter().copied().max().unwrap_or(0);
    (max as f64 * loads.len() as f64) / total as f64
}

/// Maps a balance in `[1, k]` onto `[0, 1]`: `(b - 1) / (k - 1)`.
pub fn normalized_balance(b: f64, k: usize) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    (b - 1.0) / (k as f64 - 1.0)
}

/// Number of vertices assigned to different shards.
pub fn count_moves(old: &Assignment, new: &Assignment) -> Result<usize, MetricsError> {
    if old.len() != new.len() {
        return Err(MetricsError::DomainMismatch(old.len(), new.len()));
    }
    Ok(old
        .as_slice()
        .iter()
        .zip(new.as_slice())
        .filter(|(a, b)| a != b)
        .count())
}

/// Metrics for one measurement window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub window_start: u64,
    pub static_edge_cut: f64,
    pub dynamic_edge_cut: f64,
    pub static_balance: f64,
    pub dynamic_balance: f64,
    pub moves: u64,
    pub repartitioned: bool,
}

impl MetricSample {
    /// Measures `a` over the whole graph and the given activity. Moves and
    /// the repartition flag start cleared.
    pub fn measure(
        window_start: u64,
        graph: &InteractionGraph,
        a: &Assignment,
        activity: &WindowActivity,
    ) -> Result<Self, MetricsError> {
        Ok(MetricSample {
            window_start,
            static_edge_cut: edge_cut(graph, a, Weighting::Static)?,
            dynamic_edge_cut: edge_cut(graph, a, Weighting::Dynamic(activity))?,
            static_balance: balance(graph, a, Weighting::Static)?,
            dynamic_balance: balance(graph, a, Weighting::Dynamic(activity))?,
            moves: 0,
            repartitioned: false,
        })
    }

    pub fn normalized_dynamic_balance(&self, k: usize) -> f64 {
        normalized_balance(self.dynamic_balance, k)
    }
}
