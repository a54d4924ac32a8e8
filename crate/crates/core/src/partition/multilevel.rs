//! Multilevel k-way partitioning.
//!
//! 1. **Coarsening.** Heavy-edge matching visits vertices in a seeded random
//!    order and pairs each unmatched vertex with the unmatched neighbor it
//!    shares the heaviest edge with. Vertices left over that hang off the same
//!    heaviest neighbor (leaves of a star, typically) are then paired with each
//!    other. Matched pairs are contracted; edges inside a pair disappear and
//!    parallel edges merge. This repeats until at most
//!    `max(coarsen_per_shard × k, coarsen_min)` vertices remain or a level
//!    shrinks the graph by less than 10%.
//! 2. **Initial partitioning.** Recursive bisection of the coarsest graph.
//!    Each bisection grows one side from a random vertex, always absorbing
//!    the frontier vertex most strongly tied to it, until the side reaches
//!    its share of the weight, then two-way FM with rollback improves it.
//!    Several seeded trials run and the bisection with the smallest cut is
//!    kept.
//! 3. **Uncoarsening.** The partition is projected level by level back to the
//!    input graph. At each level an overweight part is first drained, then
//!    boundary refinement moves single vertices with positive gain while the
//!    target stays within the bound, until no such move remains or the pass
//!    cap is hit. A refinement pass never increases the cut.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, PartitionerConfig};
use crate::graph::WeightedGraph;

/// Largest weight a part may carry: `(1 + ε) × total / k`, rounded down, but
/// never below `⌈total / k⌉` so that an even split is always admissible.
pub fn max_part_weight(total: i64, k: usize, epsilon: f64) -> i64 {
    let ideal = total as f64 / k as f64;
    let loose = ((1.0 + epsilon) * ideal + 1e-9).floor() as i64;
    let even = (total + k as i64 - 1) / k as i64;
    loose.max(even)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RefineStats {
    /// Refinement passes run.
    pub passes: u64,
    /// Passes after which the cut was larger than before.
    pub violations: u64,
}

impl RefineStats {
    pub fn merge(&mut self, other: RefineStats) {
        self.passes += other.passes;
        self.violations += other.violations;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelOutcome {
    pub part: Vec<usize>,
    pub cut: i64,
    pub part_weights: Vec<i64>,
    /// Set when some part exceeds the weight bound in the result.
    pub infeasible: bool,
    pub levels: usize,
    pub refine: RefineStats,
}

pub fn multilevel_partition(g: &WeightedGraph, cfg: &PartitionerConfig) -> MultilevelOutcome {
    let k = cfg.k.max(1);
    let n = g.num_vertices();
    if n == 0 || k == 1 {
        let part = vec![0; n];
        return MultilevelOutcome {
            part_weights: g.part_weights(&part, k),
            part,
            cut: 0,
            infeasible: false,
            levels: 0,
            refine: RefineStats::default(),
        };
    }
    let total = g.total_vertex_weight();
    let bound = max_part_weight(total, k, cfg.epsilon);
    let mut stats = RefineStats::default();

    let threshold = (cfg.coarsen_per_shard * k).max(cfg.coarsen_min).max(k);
    let levels = coarsen(g, threshold, cfg.rng_seed);
    let coarsest = levels.last().map_or(g, |l| &l.graph);

    // Each of the ⌈log2 k⌉ bisection levels gets an equal share of the
    // tolerance; the k-way rebalance below absorbs any remainder.
    let depth = (k as f64).log2().ceil().max(1.0);
    let level_epsilon = (1.0 + cfg.epsilon).powf(1.0 / depth) - 1.0;
    let mut part = vec![0; coarsest.num_vertices()];
    let ids: Vec<usize> = (0..coarsest.num_vertices()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.rng_seed, 1_000));
    recursive_bisection(coarsest, &ids, k, 0, level_epsilon, cfg, &mut rng, &mut stats, &mut part);
    stats.merge(balance_and_refine(coarsest, &mut part, k, bound, cfg.fm_passes));

    for i in (0..levels.len()).rev() {
        let fine = if i == 0 { g } else { &levels[i - 1].graph };
        part = levels[i].cmap.iter().map(|&c| part[c]).collect();
        stats.merge(balance_and_refine(fine, &mut part, k, bound, cfg.fm_passes));
    }

    let part_weights = g.part_weights(&part, k);
    let infeasible = part_weights.iter().any(|&w| w > bound);
    if infeasible {
        log::debug!("partition exceeds weight bound {bound}: {part_weights:?}");
    }
    MultilevelOutcome {
        cut: g.cut_weight(&part),
        part,
        part_weights,
        infeasible,
        levels: levels.len(),
        refine: stats,
    }
}

/// One contraction step: `cmap[fine] = coarse`.
#[derive(Debug, Clone)]
pub struct CoarseLevel {
    pub graph: WeightedGraph,
    pub cmap: Vec<usize>,
}

/// Repeatedly contracts `g`; levels are ordered finest to coarsest.
pub fn coarsen(g: &WeightedGraph, threshold: usize, seed: u64) -> Vec<CoarseLevel> {
    let total = g.total_vertex_weight();
    let max_vwgt = ((1.5 * total as f64 / threshold as f64).ceil() as i64).max(1);
    let mut levels: Vec<CoarseLevel> = Vec::new();
    let mut level_no = 0u64;
    loop {
        let current = levels.last().map_or(g, |l| &l.graph);
        let n = current.num_vertices();
        if n <= threshold {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, level_no));
        let (cmap, nc) = heavy_edge_matching(current, max_vwgt, &mut rng);
        if nc == n {
            break;
        }
        let graph = contract(current, &cmap, nc);
        levels.push(CoarseLevel { graph, cmap });
        level_no += 1;
        if nc as f64 > 0.9 * n as f64 {
            break;
        }
    }
    levels
}

fn heavy_edge_matching(g: &WeightedGraph, max_vwgt: i64, rng: &mut ChaCha8Rng) -> (Vec<usize>, usize) {
    const UNMATCHED: usize = usize::MAX;
    let n = g.num_vertices();
    let mut mate = vec![UNMATCHED; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    for &u in &order {
        if mate[u] != UNMATCHED {
            continue;
        }
        let mut best: Option<(usize, i64)> = None;
        for (v, w) in g.neighbors(u) {
            if mate[v] == UNMATCHED
                && g.vwgt[u] + g.vwgt[v] <= max_vwgt
                && best.is_none_or(|(_, bw)| w > bw)
            {
                best = Some((v, w));
            }
        }
        if let Some((v, _)) = best {
            mate[u] = v;
            mate[v] = u;
        }
    }

    // Pair leftover vertices that share their heaviest neighbor, and
    // isolated vertices with each other.
    let mut pending: crate::graph::DetMap<Option<usize>, usize> = Default::default();
    for &u in &order {
        if mate[u] != UNMATCHED {
            continue;
        }
        let anchor = g
            .neighbors(u)
            .max_by_key(|&(v, w)| (w, Reverse(v)))
            .map(|(v, _)| v);
        match pending.get(&anchor) {
            Some(&p) if g.vwgt[p] + g.vwgt[u] <= max_vwgt => {
                mate[u] = p;
                mate[p] = u;
                pending.remove(&anchor);
            }
            _ => {
                pending.insert(anchor, u);
            }
        }
    }

    let mut cmap = vec![UNMATCHED; n];
    let mut nc = 0;
    for u in 0..n {
        if cmap[u] != UNMATCHED {
            continue;
        }
        cmap[u] = nc;
        if mate[u] != UNMATCHED {
            cmap[mate[u]] = nc;
        }
        nc += 1;
    }
    (cmap, nc)
}

/// Contracts `g` along `cmap`, summing vertex weights and merging edges.
/// Edges inside a coarse vertex are dropped.
pub fn contract(g: &WeightedGraph, cmap: &[usize], nc: usize) -> WeightedGraph {
    let mut vwgt = vec![0; nc];
    for (u, &c) in cmap.iter().enumerate() {
        vwgt[c] += g.vwgt[u];
    }
    let edges = (0..g.num_vertices()).flat_map(|u| {
        g.neighbors(u)
            .filter(move |&(v, _)| u < v)
            .map(move |(v, w)| (cmap[u], cmap[v], w))
    });
    WeightedGraph::from_edges(vwgt, edges)
}

/// Initial partition by recursive bisection: `g` is split into two sides
/// whose target weights are proportional to the number of parts each will
/// hold, and each side is split again until single parts remain. Local
/// vertex `v` of `g` is written to `out[ids[v]]`, using parts
/// `first..first + k`.
#[allow(clippy::too_many_arguments)]
fn recursive_bisection(
    g: &WeightedGraph,
    ids: &[usize],
    k: usize,
    first: usize,
    epsilon: f64,
    cfg: &PartitionerConfig,
    rng: &mut ChaCha8Rng,
    stats: &mut RefineStats,
    out: &mut [usize],
) {
    let n = g.num_vertices();
    if k == 1 || n == 0 {
        for &v in ids {
            out[v] = first;
        }
        return;
    }
    let k0 = k / 2;
    let total = g.total_vertex_weight();
    let t0 = (total as f64 * k0 as f64 / k as f64).round() as i64;
    let targets = [t0, total - t0];
    let bounds = targets.map(|t| ((t as f64 * (1.0 + epsilon)).floor() as i64).max(t));
    let side = bisect(g, targets[0], &bounds, cfg, rng, stats);

    for (s, (parts, offset)) in [(k0, first), (k - k0, first + k0)].into_iter().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&v| side[v] == s).collect();
        let sub = induced_subgraph(g, &members);
        let sub_ids: Vec<usize> = members.iter().map(|&v| ids[v]).collect();
        recursive_bisection(&sub, &sub_ids, parts, offset, epsilon, cfg, rng, stats, out);
    }
}

/// Best of `cfg.initial_trials` grown and refined bisections.
fn bisect(
    g: &WeightedGraph,
    target0: i64,
    bounds: &[i64; 2],
    cfg: &PartitionerConfig,
    rng: &mut ChaCha8Rng,
    stats: &mut RefineStats,
) -> Vec<usize> {
    let mut best: Option<(Vec<usize>, (bool, i64))> = None;
    for _ in 0..cfg.initial_trials.max(1) {
        let mut side = grow_region(g, target0, bounds[0], rng);
        rebalance(g, &mut side, bounds);
        stats.merge(fm_bisection(g, &mut side, bounds, cfg.fm_passes));
        let loads = g.part_weights(&side, 2);
        let key = (loads[0] > bounds[0] || loads[1] > bounds[1], g.cut_weight(&side));
        if best.as_ref().is_none_or(|(_, b)| key < *b) {
            best = Some((side, key));
        }
    }
    best.map(|(side, _)| side).unwrap_or_default()
}

/// Two-way Fiduccia-Mattheyses with rollback. Within a pass every vertex
/// moves at most once, highest gain first, even when the gain is negative,
/// as long as the receiving side stays within its bound. The pass then
/// rewinds to the lowest cut it saw, so it never ends worse than it started.
fn fm_bisection(g: &WeightedGraph, side: &mut [usize], bounds: &[i64; 2], max_passes: usize) -> RefineStats {
    let n = g.num_vertices();
    let mut stats = RefineStats::default();
    // Give up on a pass after this many moves without a new best.
    let patience = (n / 4).clamp(20, 200);
    for _ in 0..max_passes {
        let mut loads = g.part_weights(side, 2);
        let start_cut = g.cut_weight(side);
        let gain_of = |side: &[usize], v: usize| -> i64 {
            g.neighbors(v).map(|(u, w)| if side[u] == side[v] { -w } else { w }).sum()
        };
        let mut gain: Vec<i64> = (0..n).map(|v| gain_of(side, v)).collect();
        let mut heaps: [BinaryHeap<(i64, Reverse<usize>)>; 2] = [BinaryHeap::new(), BinaryHeap::new()];
        for v in 0..n {
            heaps[side[v]].push((gain[v], Reverse(v)));
        }
        let mut locked = vec![false; n];
        let mut log: Vec<usize> = Vec::new();
        let (mut cut, mut best_cut, mut best_len) = (start_cut, start_cut, 0);

        loop {
            let mut pick: Option<(i64, usize)> = None;
            for s in 0..2 {
                let heap = &mut heaps[s];
                while let Some(&(gv, Reverse(v))) = heap.peek() {
                    if locked[v] || side[v] != s || gv != gain[v] {
                        heap.pop();
                        continue;
                    }
                    if loads[1 - s] + g.vwgt[v] <= bounds[1 - s] && pick.is_none_or(|(pg, _)| gv > pg) {
                        pick = Some((gv, v));
                    }
                    break;
                }
            }
            let Some((gv, v)) = pick else { break };
            heaps[side[v]].pop();
            let from = side[v];
            side[v] = 1 - from;
            loads[from] -= g.vwgt[v];
            loads[1 - from] += g.vwgt[v];
            locked[v] = true;
            cut -= gv;
            log.push(v);
            for (u, w) in g.neighbors(v) {
                if !locked[u] {
                    gain[u] += if side[u] == from { 2 * w } else { -2 * w };
                    heaps[side[u]].push((gain[u], Reverse(u)));
                }
            }
            if cut < best_cut {
                best_cut = cut;
                best_len = log.len();
            } else if log.len() - best_len > patience {
                break;
            }
        }
        for &v in &log[best_len..] {
            side[v] = 1 - side[v];
        }

        let end_cut = g.cut_weight(side);
        stats.passes += 1;
        if end_cut > start_cut {
            stats.violations += 1;
        }
        debug_assert!(end_cut <= start_cut, "bisection pass increased cut {start_cut} -> {end_cut}");
        if end_cut == start_cut {
            break;
        }
    }
    stats
}

/// Greedy graph growing: side 0 starts from a random vertex and absorbs the
/// frontier vertex most strongly tied to it (gain `2 × conn − degree`) until
/// it reaches `target`. When the frontier runs dry a random unassigned vertex
/// is taken. Everything not absorbed is side 1.
fn grow_region(g: &WeightedGraph, target: i64, bound: i64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.num_vertices();
    let mut side = vec![1usize; n];
    let degree: Vec<i64> = (0..n).map(|v| g.neighbors(v).map(|(_, w)| w).sum()).collect();
    let mut conn = vec![0i64; n];
    let mut heap: BinaryHeap<(i64, Reverse<usize>)> = BinaryHeap::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut fresh = order.into_iter();
    let mut load = 0;

    while load < target {
        let mut next = None;
        while let Some((gain, Reverse(v))) = heap.pop() {
            // Skip stale entries and vertices that no longer fit; the load
            // only grows, so they never will.
            if side[v] == 1 && gain == 2 * conn[v] - degree[v] && load + g.vwgt[v] <= bound {
                next = Some(v);
                break;
            }
        }
        let v = match next.or_else(|| fresh.by_ref().find(|&v| side[v] == 1 && load + g.vwgt[v] <= bound)) {
            Some(v) => v,
            None => break,
        };
        side[v] = 0;
        load += g.vwgt[v];
        for (u, w) in g.neighbors(v) {
            if side[u] == 1 {
                conn[u] += w;
                heap.push((2 * conn[u] - degree[u], Reverse(u)));
            }
        }
    }
    side
}

/// The subgraph induced by `members`, renumbered in the given order.
fn induced_subgraph(g: &WeightedGraph, members: &[usize]) -> WeightedGraph {
    let mut local = vec![usize::MAX; g.num_vertices()];
    for (i, &v) in members.iter().enumerate() {
        local[v] = i;
    }
    let vwgt = members.iter().map(|&v| g.vwgt[v]).collect();
    let edges = members.iter().enumerate().flat_map(|(i, &v)| {
        let local = &local;
        g.neighbors(v)
            .filter(move |&(u, _)| local[u] != usize::MAX && local[u] > i)
            .map(move |(u, w)| (i, local[u], w))
    });
    WeightedGraph::from_edges(vwgt, edges)
}

/// Brings overweight parts under the bound, then refines.
fn balance_and_refine(
    g: &WeightedGraph,
    part: &mut [usize],
    k: usize,
    bound: i64,
    max_passes: usize,
) -> RefineStats {
    let bounds = vec![bound; k];
    rebalance(g, part, &bounds);
    refine_bounded(g, part, &bounds, max_passes)
}

/// Edge weight from `v` into each part, returned through `conn` (cleared
/// first) with the list of parts touched.
fn connectivity(g: &WeightedGraph, part: &[usize], v: usize, conn: &mut [i64], touched: &mut Vec<usize>) {
    for &p in touched.iter() {
        conn[p] = 0;
    }
    touched.clear();
    for (u, w) in g.neighbors(v) {
        let p = part[u];
        if conn[p] == 0 {
            touched.push(p);
        }
        conn[p] += w;
    }
}

/// Best positive-gain move of `v` into a part with room, as `(gain, target)`.
fn best_move(
    g: &WeightedGraph,
    part: &[usize],
    loads: &[i64],
    bounds: &[i64],
    v: usize,
    conn: &mut [i64],
    touched: &mut Vec<usize>,
) -> Option<(i64, usize)> {
    connectivity(g, part, v, conn, touched);
    let own = part[v];
    let internal = conn[own];
    touched
        .iter()
        .copied()
        .filter(|&p| p != own && loads[p] + g.vwgt[v] <= bounds[p])
        .map(|p| (conn[p] - internal, p))
        .filter(|&(gain, _)| gain > 0)
        .max_by_key(|&(gain, p)| (gain, Reverse(loads[p]), Reverse(p)))
}

/// Boundary refinement: positive-gain single-vertex moves that respect the
/// bound, repeated until a pass makes no move or the pass cap is reached.
pub fn refine(g: &WeightedGraph, part: &mut [usize], k: usize, bound: i64, max_passes: usize) -> RefineStats {
    refine_bounded(g, part, &vec![bound; k], max_passes)
}

/// [`refine`] with a separate bound per part.
fn refine_bounded(g: &WeightedGraph, part: &mut [usize], bounds: &[i64], max_passes: usize) -> RefineStats {
    let k = bounds.len();
    let n = g.num_vertices();
    let mut stats = RefineStats::default();
    let mut loads = g.part_weights(part, k);
    let mut conn = vec![0i64; k];
    let mut touched = Vec::with_capacity(k);

    for _ in 0..max_passes {
        let cut_before = g.cut_weight(part);
        let mut moves: Vec<(i64, usize)> = (0..n)
            .filter_map(|v| {
                best_move(g, part, &loads, bounds, v, &mut conn, &mut touched).map(|(gain, _)| (gain, v))
            })
            .collect();
        moves.sort_by_key(|&(gain, v)| (Reverse(gain), v));

        let mut moved = 0;
        for (_, v) in moves {
            if let Some((_, target)) = best_move(g, part, &loads, bounds, v, &mut conn, &mut touched) {
                loads[part[v]] -= g.vwgt[v];
                loads[target] += g.vwgt[v];
                part[v] = target;
                moved += 1;
            }
        }

        let cut_after = g.cut_weight(part);
        stats.passes += 1;
        if cut_after > cut_before {
            stats.violations += 1;
        }
        debug_assert!(cut_after <= cut_before, "refinement pass increased cut {cut_before} -> {cut_after}");
        if moved == 0 {
            break;
        }
    }
    stats
}

/// Moves vertices out of parts above the bound, preferring the moves that
/// lose the least cut, into the lightest parts that can take them.
fn rebalance(g: &WeightedGraph, part: &mut [usize], bounds: &[i64]) {
    let k = bounds.len();
    let mut loads = g.part_weights(part, k);
    if loads.iter().zip(bounds).all(|(l, b)| l <= b) {
        return;
    }
    let n = g.num_vertices();
    let mut conn = vec![0i64; k];
    let mut touched = Vec::with_capacity(k);
    for heavy in 0..k {
        if loads[heavy] <= bounds[heavy] {
            continue;
        }
        // Candidates ordered by loss of moving them to their best other part.
        let mut members: Vec<(i64, usize)> = (0..n)
            .filter(|&v| part[v] == heavy)
            .map(|v| {
                connectivity(g, part, v, &mut conn, &mut touched);
                let best_ext = touched.iter().filter(|&&p| p != heavy).map(|&p| conn[p]).max().unwrap_or(0);
                (conn[heavy] - best_ext, v)
            })
            .collect();
        members.sort_by_key(|&(loss, v)| (loss, v));
        for (_, v) in members {
            if loads[heavy] <= bounds[heavy] {
                break;
            }
            connectivity(g, part, v, &mut conn, &mut touched);
            let target = (0..k)
                .filter(|&p| p != heavy && loads[p] + g.vwgt[v] <= bounds[p])
                .max_by_key(|&p| (conn[p], Reverse(loads[p]), Reverse(p)));
            if let Some(t) = target {
                loads[heavy] -= g.vwgt[v];
                loads[t] += g.vwgt[v];
                part[v] = t;
            }
        }
    }
}
