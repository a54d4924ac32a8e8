//! The evolving interaction graph, per-window activity counters, the record
//! log used for windowed subgraphs, and the compressed undirected view the
//! partitioners work on.
//!
//! Vertices are numbered densely in first-seen order. Edge direction is kept
//! in storage; cut and partitioning code goes through the undirected view,
//! where `a→b` and `b→a` merge into one edge with summed weight.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, VecDeque};
use std::hash::BuildHasherDefault;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::trace::{TraceRecord, VertexId, VertexKind};

/// Dense vertex number within one [`InteractionGraph`].
pub type VertexIndex = usize;

/// Hash maps with a fixed hasher so iteration order is reproducible run to run.
pub(crate) type DetMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionGraph {
    ids: Vec<VertexId>,
    kinds: Vec<VertexKind>,
    static_weight: Vec<u64>,
    index: DetMap<VertexId, VertexIndex>,
    edges: DetMap<(VertexIndex, VertexIndex), u64>,
    undirected: DetMap<(VertexIndex, VertexIndex), u64>,
    total_weight: u64,
}

impl InteractionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vertices(&self) -> usize {
        self.ids.len()
    }

    /// Number of distinct directed `(from, to)` pairs.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of edges once anti-parallel pairs are merged. Self-loops count.
    pub fn num_undirected_edges(&self) -> usize {
        self.undirected.len()
    }

    /// Sum of all edge weights, i.e. the number of records applied.
    pub fn total_edge_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &VertexId) -> Option<VertexIndex> {
        self.index.get(id).copied()
    }

    pub fn id(&self, v: VertexIndex) -> VertexId {
        self.ids[v]
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn kind(&self, v: VertexIndex) -> VertexKind {
        self.kinds[v]
    }

    /// Number of records in which the vertex appears as an endpoint.
    pub fn static_weight(&self, v: VertexIndex) -> u64 {
        self.static_weight[v]
    }

    pub fn edge_weight(&self, from: VertexIndex, to: VertexIndex) -> u64 {
        self.edges.get(&(from, to)).copied().unwrap_or(0)
    }

    /// Directed edges with their cumulative weights, in unspecified order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexIndex, VertexIndex, u64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    /// Undirected edges `(lo, hi, weight)` with `lo <= hi`, in unspecified order.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (VertexIndex, VertexIndex, u64)> + '_ {
        self.undirected.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    /// In-weight of a vertex: total weight of edges pointing at it.
    pub fn in_weight(&self, v: VertexIndex) -> u64 {
        self.edges
            .iter()
            .filter(|(&(_, to), _)| to == v)
            .map(|(_, &w)| w)
            .sum()
    }

    /// Returns the index of `id`, inserting it with zero weight if unseen.
    /// The kind of an existing vertex is left untouched.
    pub fn ensure_vertex(&mut self, id: VertexId, kind: VertexKind) -> VertexIndex {
        if let Some(&v) = self.index.get(&id) {
            return v;
        }
        let v = self.ids.len();
        self.ids.push(id);
        self.kinds.push(kind);
        self.static_weight.push(0);
        self.index.insert(id, v);
        v
    }

    /// Adds one interaction and returns the endpoint indices.
    pub fn apply(&mut self, r: &TraceRecord) -> (VertexIndex, VertexIndex) {
        let a = self.ensure_vertex(r.from, r.from_kind);
        let b = self.ensure_vertex(r.to, r.to_kind);
        self.static_weight[a] += 1;
        if a != b {
            self.static_weight[b] += 1;
        }
        *self.edges.entry((a, b)).or_insert(0) += 1;
        *self.undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        self.total_weight += 1;
        (a, b)
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a TraceRecord>) -> Self {
        let mut g = Self::new();
        for r in records {
            g.apply(r);
        }
        g
    }

    /// Builds the undirected compressed view used by the partitioners.
    pub fn to_weighted(&self, vertex_weights: VertexWeighting) -> WeightedGraph {
        let vwgt = (0..self.num_vertices())
            .map(|v| match vertex_weights {
                VertexWeighting::Unit => 1,
                VertexWeighting::Activity => self.static_weight[v].max(1) as i64,
            })
            .collect();
        WeightedGraph::from_edges(
            vwgt,
            self.undirected
                .iter()
                .map(|(&(a, b), &w)| (a, b, w as i64)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexWeighting {
    /// Every vertex weighs 1 (static balance).
    Unit,
    /// A vertex weighs the number of records it appears in.
    Activity,
}

/// Applies a record to both the graph and the current window counters.
pub fn apply_record(
    graph: &mut InteractionGraph,
    activity: &mut WindowActivity,
    r: &TraceRecord,
) -> (VertexIndex, VertexIndex) {
    debug_assert!(activity.contains(r.timestamp), "record outside the open window");
    let (a, b) = graph.apply(r);
    activity.record(a, b);
    (a, b)
}

/// Interaction counts within one measurement window. Indices refer to the
/// graph the activity was recorded against.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowActivity {
    window_start: u64,
    window_len: u64,
    edge_activity: DetMap<(VertexIndex, VertexIndex), u64>,
    vertex_activity: DetMap<VertexIndex, u64>,
    total: u64,
}

impl WindowActivity {
    pub fn new(window_start: u64, window_len: u64) -> Self {
        WindowActivity {
            window_start,
            window_len,
            edge_activity: DetMap::default(),
            vertex_activity: DetMap::default(),
            total: 0,
        }
    }

    /// A window that never closes, used for all-history weights.
    pub fn unbounded(start: u64) -> Self {
        Self::new(start, u64::MAX - start)
    }

    pub fn window_start(&self) -> u64 {
        self.window_start
    }

    pub fn window_len(&self) -> u64 {
        self.window_len
    }

    pub fn window_end(&self) -> u64 {
        self.window_start.saturating_add(self.window_len)
    }

    pub fn contains(&self, t: u64) -> bool {
        t >= self.window_start && t < self.window_end()
    }

    /// Counts one interaction. A self-loop adds 2 to its vertex.
    pub fn record(&mut self, from: VertexIndex, to: VertexIndex) {
        *self.edge_activity.entry((from, to)).or_insert(0) += 1;
        *self.vertex_activity.entry(from).or_insert(0) += 1;
        *self.vertex_activity.entry(to).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn edge_activity(&self) -> impl Iterator<Item = (VertexIndex, VertexIndex, u64)> + '_ {
        self.edge_activity.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn vertex_activity(&self) -> impl Iterator<Item = (VertexIndex, u64)> + '_ {
        self.vertex_activity.iter().map(|(&v, &w)| (v, w))
    }

    pub fn activity_of(&self, v: VertexIndex) -> u64 {
        self.vertex_activity.get(&v).copied().unwrap_or(0)
    }

    /// Number of interactions recorded (sum of edge activity).
    pub fn total_edge_activity(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Ends the window: returns the finished counts and a fresh window that
    /// starts where this one ended.
    pub fn close(self) -> (WindowActivity, WindowActivity) {
        let fresh = WindowActivity::new(self.window_end(), self.window_len);
        (self, fresh)
    }
}

/// Retained records, used to rebuild the subgraph of a time interval.
#[derive(Debug, Clone, Default)]
pub struct RecordLog {
    records: VecDeque<TraceRecord>,
}

impl RecordLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: TraceRecord) {
        debug_assert!(self.records.back().is_none_or(|last| last.timestamp <= r.timestamp));
        self.records.push_back(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Drops every record with timestamp before `t`.
    pub fn discard_before(&mut self, t: u64) {
        while self.records.front().is_some_and(|r| r.timestamp < t) {
            self.records.pop_front();
        }
    }

    pub fn records_in(&self, from_t: u64, to_t: u64) -> impl Iterator<Item = &TraceRecord> {
        let start = self.records.partition_point(|r| r.timestamp < from_t);
        self.records
            .range(start..)
            .take_while(move |r| r.timestamp < to_t)
    }

    /// Graph of exactly the vertices and edges touched in `[from_t, to_t)`,
    /// with weights counted over that interval only.
    pub fn window_subgraph(&self, from_t: u64, to_t: u64) -> InteractionGraph {
        InteractionGraph::from_records(self.records_in(from_t, to_t))
    }
}

/// Undirected weighted graph in compressed adjacency form. Self-loops are
/// dropped; they can never be cut.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub xadj: Vec<usize>,
    pub adjncy: Vec<usize>,
    pub adjwgt: Vec<i64>,
    pub vwgt: Vec<i64>,
}

impl WeightedGraph {
    /// Builds from undirected edges; duplicates and both orientations are
    /// merged by summing weights.
    pub fn from_edges(vwgt: Vec<i64>, edges: impl IntoIterator<Item = (usize, usize, i64)>) -> Self {
        let n = vwgt.len();
        let mut adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
        for (a, b, w) in edges {
            if a == b {
                continue;
            }
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        let mut xadj = Vec::with_capacity(n + 1);
        let mut adjncy = Vec::new();
        let mut adjwgt = Vec::new();
        xadj.push(0);
        for list in &mut adj {
            list.sort_unstable_by_key(|&(v, _)| v);
            let mut i = 0;
            while i < list.len() {
                let (v, mut w) = list[i];
                i += 1;
                while i < list.len() && list[i].0 == v {
                    w += list[i].1;
                    i += 1;
                }
                adjncy.push(v);
                adjwgt.push(w);
            }
            xadj.push(adjncy.len());
        }
        WeightedGraph {
            xadj,
            adjncy,
            adjwgt,
            vwgt,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vwgt.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjncy.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        let range = self.xadj[v]..self.xadj[v + 1];
        self.adjncy[range.clone()]
            .iter()
            .copied()
            .zip(self.adjwgt[range].iter().copied())
    }

    pub fn total_vertex_weight(&self) -> i64 {
        self.vwgt.iter().sum()
    }

    pub fn total_edge_weight(&self) -> i64 {
        self.adjwgt.iter().sum::<i64>() / 2
    }

    /// Total weight of edges whose endpoints lie in different parts.
    pub fn cut_weight(&self, part: &[usize]) -> i64 {
        let mut cut = 0;
        for u in 0..self.num_vertices() {
            for (v, w) in self.neighbors(u) {
                if u < v && part[u] != part[v] {
                    cut += w;
                }
            }
        }
        cut
    }

    pub fn part_weights(&self, part: &[usize], k: usize) -> Vec<i64> {
        let mut loads = vec![0; k];
        for (&p, &w) in part.iter().zip(&self.vwgt) {
            loads[p] += w;
        }
        loads
    }

    /// Writes the graph in the plain-text adjacency format understood by
    /// common partitioners: a `n m 011` header, then one line per vertex
    /// holding its weight and 1-based `neighbor weight` pairs.
    pub fn write_adjacency<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {} 011", self.num_vertices(), self.num_edges())?;
        for v in 0..self.num_vertices() {
            write!(out, "{}", self.vwgt[v])?;
            for (u, w) in self.neighbors(v) {
                write!(out, " {} {}", u + 1, w)?;
            }
            writeln!(out)?;
        }
        out.flush()
    }

    /// Reads the adjacency format written by [`write_adjacency`](Self::write_adjacency).
    /// Missing weights default to 1; `%` lines are comments.
    pub fn read_adjacency<R: BufRead>(input: R) -> Result<Self, GraphError> {
        let mut lines = input
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.as_ref().is_ok_and(|s| s.trim_start().starts_with('%')));
        let err = |line: usize, reason: &str| GraphError::Parse {
            line,
            reason: reason.to_string(),
        };

        let (hline, header) = match lines.next() {
            Some((i, l)) => (i, l?),
            None => return Err(err(1, "missing header")),
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(err(hline, "header needs vertex and edge counts"));
        }
        let n: usize = fields[0].parse().map_err(|_| err(hline, "bad vertex count"))?;
        let m: usize = fields[1].parse().map_err(|_| err(hline, "bad edge count"))?;
        let fmt = fields.get(2).copied().unwrap_or("0");
        if fmt.len() > 3 || !fmt.chars().all(|c| c == '0' || c == '1') {
            return Err(err(hline, "bad format flags"));
        }
        let fmt = format!("{fmt:0>3}");
        if fmt.as_bytes()[0] == b'1' {
            return Err(err(hline, "vertex sizes are not supported"));
        }
        let has_vwgt = fmt.as_bytes()[1] == b'1';
        let has_ewgt = fmt.as_bytes()[2] == b'1';
        if fields.get(3).is_some_and(|&c| c != "1") {
            return Err(err(hline, "multiple constraints are not supported"));
        }

        let mut vwgt = Vec::with_capacity(n);
        let mut edges = Vec::new();
        for v in 0..n {
            let (line, text) = match lines.next() {
                Some((i, l)) => (i, l?),
                None => return Err(err(hline + v + 1, "fewer vertex lines than declared")),
            };
            let mut nums = text.split_whitespace().map(|s| {
                s.parse::<i64>()
                    .map_err(|_| err(line, &format!("not an integer: {s:?}")))
            });
            vwgt.push(if has_vwgt {
                nums.next().ok_or_else(|| err(line, "missing vertex weight"))??
            } else {
                1
            });
            while let Some(u) = nums.next() {
                let u = u?;
                if u < 1 || u as usize > n {
                    return Err(err(line, "neighbor out of range"));
                }
                let w = if has_ewgt {
                    nums.next().ok_or_else(|| err(line, "missing edge weight"))??
                } else {
                    1
                };
                let u = u as usize - 1;
                if v < u {
                    edges.push((v, u, w));
                }
            }
        }
        let g = WeightedGraph::from_edges(vwgt, edges);
        if g.num_edges() != m {
            return Err(err(
                hline,
                &format!("header declares {m} edges, adjacency lists hold {}", g.num_edges()),
            ));
        }
        Ok(g)
    }
}

/// Writes the sidecar that maps adjacency line index (0-based) to vertex id.
pub fn write_id_sidecar<W: Write>(mut out: W, ids: &[VertexId]) -> io::Result<()> {
    for id in ids {
        writeln!(out, "{id}")?;
    }
    out.flush()
}

pub fn read_id_sidecar<R: BufRead>(input: R) -> Result<Vec<VertexId>, GraphError> {
    let mut ids = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        ids.push(text.parse().map_err(|e| GraphError::Parse {
            line: i + 1,
            reason: format!("{e}"),
        })?);
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::CallKind;
    use proptest::prelude::*;

    fn vid(n: u64) -> VertexId {
        let mut b = [0u8; 20];
        b[12..].copy_from_slice(&n.to_be_bytes());
        VertexId(b)
    }

    fn rec(t: u64, from: u64, to: u64) -> TraceRecord {
        TraceRecord {
            timestamp: t,
            block: t,
            from: vid(from),
            from_kind: VertexKind::Account,
            to: vid(to),
            to_kind: VertexKind::Account,
            call_kind: CallKind::Transfer,
            tx_id: format!("t{t}"),
        }
    }

    #[test]
    fn single_record() {
        let mut g = InteractionGraph::new();
        let mut act = WindowActivity::new(0, 100);
        apply_record(&mut g, &mut act, &rec(1, 1, 2));
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edge_weight(0, 1), 1);
        assert_eq!(act.total_edge_activity(), 1);
    }

    #[test]
    fn self_loop() {
        let mut g = InteractionGraph::new();
        let mut act = WindowActivity::new(0, 100);
        let (a, b) = apply_record(&mut g, &mut act, &rec(1, 7, 7));
        assert_eq!(a, b);
        assert_eq!(g.edge_weight(a, a), 1);
        assert_eq!(act.activity_of(a), 2);
        assert_eq!(g.static_weight(a), 1);
        assert_eq!(g.to_weighted(VertexWeighting::Unit).num_edges(), 0);
    }

    // Subgraph around contract 9703: 13 + 3 + 2 instantiations from three
    // callers, then two transfers to each of three accounts.
    #[test]
    fn contract_in_weight_accumulates() {
        let mut records = Vec::new();
        let mut t = 0;
        for (caller, times) in [(8900, 13), (8930, 3), (17303, 2)] {
            for _ in 0..times {
                records.push(rec(t, caller, 9703));
                t += 1;
            }
        }
        for acct in [9960, 17257, 17265] {
            for _ in 0..2 {
                records.push(rec(t, 9703, acct));
                t += 1;
            }
        }
        let g = InteractionGraph::from_records(&records);
        let c = g.index_of(&vid(9703)).unwrap();
        assert_eq!(g.in_weight(c), 18);
        assert_eq!(g.edge_weight(g.index_of(&vid(8900)).unwrap(), c), 13);
        assert_eq!(g.edge_weight(c, g.index_of(&vid(17257)).unwrap()), 2);
        assert_eq!(g.static_weight(c), 24);
    }

    #[test]
    fn anti_parallel_edges_merge_undirected() {
        let g = InteractionGraph::from_records(&[rec(0, 1, 2), rec(1, 2, 1), rec(2, 2, 1)]);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.num_undirected_edges(), 1);
        let w = g.to_weighted(VertexWeighting::Unit);
        assert_eq!(w.neighbors(0).collect::<Vec<_>>(), vec![(1, 3)]);
    }

    #[test]
    fn window_subgraph_filters_by_time() {
        let mut log = RecordLog::new();
        log.push(rec(1, 0xa, 0xb));
        log.push(rec(10, 0xb, 0xc));
        let sub = log.window_subgraph(5, 15);
        assert_eq!(sub.num_vertices(), 2);
        assert_eq!(sub.ids(), &[vid(0xb), vid(0xc)]);
        assert_eq!(sub.num_edges(), 1);
        assert_eq!(sub.edge_weight(0, 1), 1);

        assert!(log.window_subgraph(20, 30).is_empty());
        let full = InteractionGraph::from_records(&[rec(1, 0xa, 0xb), rec(10, 0xb, 0xc)]);
        assert_eq!(log.window_subgraph(0, u64::MAX), full);
    }

    #[test]
    fn discard_keeps_later_records() {
        let mut log = RecordLog::new();
        for t in 0..10 {
            log.push(rec(t, t, t + 1));
        }
        log.discard_before(7);
        assert_eq!(log.len(), 3);
        assert_eq!(log.window_subgraph(0, 100).num_vertices(), 4);
    }

    #[test]
    fn close_window() {
        let act = WindowActivity::new(100, 50);
        let (done, fresh) = act.close();
        assert_eq!(done.total_edge_activity(), 0);
        assert_eq!(fresh.window_start(), 150);

        let mut act = fresh;
        act.record(0, 1);
        act.record(1, 2);
        let (done, fresh) = act.close();
        assert_eq!(done.edge_activity().map(|(_, _, w)| w).sum::<u64>(), 2);
        assert!(fresh.is_empty());
        let (_, next) = fresh.close();
        assert_eq!(next.window_start(), 250);
    }

    #[test]
    fn adjacency_format_round_trip() {
        let g = InteractionGraph::from_records(&[
            rec(0, 1, 2),
            rec(1, 2, 3),
            rec(2, 3, 1),
            rec(3, 3, 1),
            rec(4, 4, 4),
        ]);
        let w = g.to_weighted(VertexWeighting::Activity);
        let mut buf = Vec::new();
        w.write_adjacency(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next(), Some("4 3 011"));
        let back = WeightedGraph::read_adjacency(&buf[..]).unwrap();
        assert_eq!(back, w);

        let mut ids = Vec::new();
        write_id_sidecar(&mut ids, g.ids()).unwrap();
        assert_eq!(read_id_sidecar(&ids[..]).unwrap(), g.ids());
    }

    #[test]
    fn adjacency_without_weights() {
        let text = "% comment\n3 2\n2\n1 3\n2\n";
        let g = WeightedGraph::read_adjacency(text.as_bytes()).unwrap();
        assert_eq!(g.vwgt, vec![1, 1, 1]);
        assert_eq!(g.total_edge_weight(), 2);
        assert!(WeightedGraph::read_adjacency("3 5\n2\n1 3\n2\n".as_bytes()).is_err());
        assert!(WeightedGraph::read_adjacency("2 1\n3\n1\n".as_bytes()).is_err());
    }

    proptest! {
        // Prefix replay agrees with a brute-force tally, and cumulative
        // weights do not depend on record order.
        #[test]
        fn prefix_tally(pairs in proptest::collection::vec((0u64..12, 0u64..12), 0..80), cut in 0usize..80) {
            let records: Vec<_> = pairs.iter().enumerate().map(|(t, &(a, b))| rec(t as u64, a, b)).collect();
            let prefix = &records[..cut.min(records.len())];
            let g = InteractionGraph::from_records(prefix);

            let mut verts = std::collections::BTreeSet::new();
            let mut edges = std::collections::BTreeMap::new();
            for r in prefix {
                verts.insert(r.from);
                verts.insert(r.to);
                *edges.entry((r.from, r.to)).or_insert(0u64) += 1;
            }
            prop_assert_eq!(g.num_vertices(), verts.len());
            prop_assert_eq!(g.num_edges(), edges.len());
            prop_assert_eq!(g.total_edge_weight(), prefix.len() as u64);
            for ((f, t), w) in &edges {
                prop_assert_eq!(g.edge_weight(g.index_of(f).unwrap(), g.index_of(t).unwrap()), *w);
            }

            let reversed = InteractionGraph::from_records(prefix.iter().rev());
            for ((f, t), w) in &edges {
                prop_assert_eq!(reversed.edge_weight(reversed.index_of(f).unwrap(), reversed.index_of(t).unwrap()), *w);
            }

            let mut act = WindowActivity::unbounded(0);
            let mut g2 = InteractionGraph::new();
            for r in prefix {
                apply_record(&mut g2, &mut act, r);
            }
            let vsum: u64 = act.vertex_activity().map(|(_, w)| w).sum();
            prop_assert_eq!(vsum, 2 * act.total_edge_activity());
        }
    }
}
