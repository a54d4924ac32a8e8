//! Periodic Kernighan-Lin style repartitioning driven by an oracle.
//!
//! One round has three steps:
//!
//! 1. Every shard nominates the vertices that would cut fewer interactions
//!    elsewhere ([`select_candidates`]). The gain of moving `v` to shard `j`
//!    is its edge weight towards `j` minus its edge weight inside its own
//!    shard; a vertex is nominated for its best shard when that gain is
//!    positive.
//! 2. The oracle turns the nominations into a row-stochastic `k × k` matrix
//!    ([`build_matrix`]). Entry `p[i][j]` is the fraction of shard `i`'s
//!    candidates that should end up in shard `j`, chosen so that the expected
//!    weight flow moves every shard towards the mean weight and never past it.
//! 3. Shards exchange candidates at random according to the matrix
//!    ([`exchange`]).
//!
//! The flow construction: demand `D[i][j]` is the summed weight of shard
//! `i`'s candidates targeting `j`. Opposite demands cancel out for balance, so
//! `min(D[i][j], D[j][i])` is granted in both directions. What remains is
//! one-directional; it is scaled down so that an overweight shard sends at
//! most its surplus over the mean and an underweight shard receives at most
//! its deficit. A shard at or above the mean receives no residual flow, and a
//! shard at or below it sends none.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, PartitionerConfig};
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub vertex: usize,
    pub target: usize,
    pub gain: i64,
    /// Vertex weight, i.e. how much load moves with it.
    pub weight: i64,
}

/// Per-shard candidate lists, each ordered by vertex index.
pub fn select_candidates(g: &WeightedGraph, part: &[usize], k: usize) -> Vec<Vec<Candidate>> {
    let mut out = vec![Vec::new(); k];
    let mut conn = vec![0i64; k];
    for v in 0..g.num_vertices() {
        let own = part[v];
        conn.iter_mut().for_each(|c| *c = 0);
        let mut any = false;
        for (u, w) in g.neighbors(v) {
            conn[part[u]] += w;
            any = true;
        }
        if !any {
            continue;
        }
        let internal = conn[own];
        let best = (0..k)
            .filter(|&j| j != own)
            .max_by_key(|&j| (conn[j], std::cmp::Reverse(j)));
        if let Some(target) = best {
            let gain = conn[target] - internal;
            if gain > 0 {
                out[own].push(Candidate {
                    vertex: v,
                    target,
                    gain,
                    weight: g.vwgt[v],
                });
            }
        }
    }
    out
}

/// Row-stochastic `k × k` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    k: usize,
    p: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn identity(k: usize) -> Self {
        let mut p = vec![0.0; k * k];
        for i in 0..k {
            p[i * k + i] = 1.0;
        }
        ProbabilityMatrix { k, p }
    }

    /// Builds from rows; panics unless every row is a probability vector.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let k = rows.len();
        let p: Vec<f64> = rows.into_iter().flatten().collect();
        assert_eq!(p.len(), k * k, "matrix must be square");
        let m = ProbabilityMatrix { k, p };
        assert!(m.is_row_stochastic(1e-9), "rows must be probability vectors");
        m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.k..(i + 1) * self.k]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.k)
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        (0..self.k).all(|i| {
            let row = self.row(i);
            row.iter().all(|&x| x >= -tol) && (row.iter().sum::<f64>() - 1.0).abs() <= tol
        })
    }
}

/// Computes the exchange matrix from the nominations and current shard
/// weights.
pub fn build_matrix(candidates: &[Vec<Candidate>], shard_weights: &[i64]) -> ProbabilityMatrix {
    let k = shard_weights.len();
    let mut demand = vec![vec![0.0f64; k]; k];
    let mut count = vec![vec![0usize; k]; k];
    for (i, list) in candidates.iter().enumerate() {
        for c in list {
            demand[i][c.target] += c.weight as f64;
            count[i][c.target] += 1;
        }
    }
    let flow = balanced_flow(&demand, shard_weights);

    let mut m = ProbabilityMatrix::identity(k);
    for i in 0..k {
        let n_i = candidates[i].len();
        if n_i == 0 {
            continue;
        }
        let mut moved = 0.0;
        for j in 0..k {
            if j == i || demand[i][j] <= 0.0 {
                continue;
            }
            let accept = (flow[i][j] / demand[i][j]).clamp(0.0, 1.0);
            let p = accept * count[i][j] as f64 / n_i as f64;
            m.p[i * k + j] = p;
            moved += p;
        }
        m.p[i * k + i] = (1.0 - moved).max(0.0);
    }
    m
}

/// Expected weight flow `F[i][j] <= D[i][j]` that keeps every shard between
/// its current weight and the mean.
fn balanced_flow(demand: &[Vec<f64>], shard_weights: &[i64]) -> Vec<Vec<f64>> {
    let k = shard_weights.len();
    let mean = shard_weights.iter().sum::<i64>() as f64 / k as f64;
    let surplus: Vec<f64> = shard_weights.iter().map(|&w| w as f64 - mean).collect();

    let mut flow = vec![vec![0.0; k]; k];
    let mut residual = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let swap = demand[i][j].min(demand[j][i]);
            flow[i][j] = swap;
            residual[i][j] = demand[i][j] - swap;
        }
    }

    let scale = |cap: f64, total: f64| {
        if total > 0.0 {
            (cap.max(0.0) / total).min(1.0)
        } else {
            0.0
        }
    };
    let out_scale: Vec<f64> = (0..k)
        .map(|i| scale(surplus[i], residual[i].iter().sum()))
        .collect();
    let in_scale: Vec<f64> = (0..k)
        .map(|j| scale(-surplus[j], (0..k).map(|i| residual[i][j]).sum()))
        .collect();
    for i in 0..k {
        for j in 0..k {
            if residual[i][j] > 0.0 {
                flow[i][j] += residual[i][j] * out_scale[i].min(in_scale[j]);
            }
        }
    }
    flow
}

/// Moves candidates at random as directed by `m`.
///
/// A candidate of shard `i` nominated for shard `t` moves there with
/// probability `p[i][t] / q`, where `q` is the fraction of shard `i`'s
/// candidates nominated for `t` (capped at 1). Across the candidate list this
/// realizes `p[i][t]` as the fraction moving to `t`. Non-candidates never
/// move, and one random draw is taken per candidate regardless of outcome.
pub fn exchange(
    part: &[usize],
    candidates: &[Vec<Candidate>],
    m: &ProbabilityMatrix,
    rng_seed: u64,
) -> Vec<usize> {
    let k = m.k();
    let mut out = part.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for (i, list) in candidates.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let mut share = vec![0usize; k];
        for c in list {
            share[c.target] += 1;
        }
        for c in list {
            let q = share[c.target] as f64 / list.len() as f64;
            let prob = (m.get(i, c.target) / q).min(1.0);
            let draw: f64 = rng.gen();
            if draw < prob {
                out[c.vertex] = c.target;
            }
        }
    }
    out
}

/// Runs `cfg.kl_rounds` rounds of select / build / exchange.
pub fn kl_repartition(g: &WeightedGraph, part: &[usize], cfg: &PartitionerConfig) -> Vec<usize> {
    let mut current = part.to_vec();
    for round in 0..cfg.kl_rounds {
        let candidates = select_candidates(g, &current, cfg.k);
        if candidates.iter().all(Vec::is_empty) {
            break;
        }
        let weights = g.part_weights(&current, cfg.k);
        let m = build_matrix(&candidates, &weights);
        current = exchange(&current, &candidates, &m, mix_seed(cfg.rng_seed, round as u64));
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_graph(n: usize, edges: &[(usize, usize)]) -> WeightedGraph {
        WeightedGraph::from_edges(vec![1; n], edges.iter().map(|&(a, b)| (a, b, 1)))
    }

    #[test]
    fn gain_matches_cut_delta() {
        // Vertex 0 in shard 0: one edge inside (to 1), three to shard 1.
        let g = unit_graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let part = vec![0, 0, 1, 1, 1];
        let cands = select_candidates(&g, &part, 2);
        let c0 = cands[0].iter().find(|c| c.vertex == 0).copied().unwrap();
        assert_eq!((c0.target, c0.gain), (1, 2));

        let mut moved = part.clone();
        moved[0] = 1;
        assert_eq!(g.cut_weight(&part) - g.cut_weight(&moved), c0.gain);
    }

    #[test]
    fn internal_and_isolated_vertices_are_not_candidates() {
        let g = unit_graph(4, &[(0, 1), (1, 2)]);
        let part = vec![0, 0, 0, 1];
        let cands = select_candidates(&g, &part, 2);
        assert!(cands.iter().flatten().all(|c| c.vertex != 0 && c.vertex != 1 && c.vertex != 3));
    }

    #[test]
    fn no_candidates_gives_identity() {
        let m = build_matrix(&[vec![], vec![], vec![]], &[5, 1, 1]);
        assert!(m.is_identity());
    }

    fn cand(vertex: usize, target: usize, weight: i64) -> Candidate {
        Candidate {
            vertex,
            target,
            gain: 1,
            weight,
        }
    }

    // Shards weigh 30 and 10, so shard 0 is over by w = 20. Moving w/2 = 10
    // equalizes them. Shard 0 offers four candidates of weight 5 (demand 20),
    // so half of them must move: p[0][1] = 0.5, and shard 1 sends nothing.
    #[test]
    fn two_shard_flow_balance() {
        let cands = vec![(0..4).map(|v| cand(v, 1, 5)).collect(), vec![]];
        let m = build_matrix(&cands, &[30, 10]);
        assert!((m.get(0, 1) - 0.5).abs() < 1e-12);
        assert!((m.get(0, 0) - 0.5).abs() < 1e-12);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.get(1, 1), 1.0);
    }

    // Demand below the surplus: everything moves but nothing more.
    #[test]
    fn insufficient_demand_moves_all() {
        let cands = vec![vec![cand(0, 1, 3)], vec![]];
        let m = build_matrix(&cands, &[30, 10]);
        assert_eq!(m.get(0, 1), 1.0);
    }

    // Balanced shards with one-sided demand cannot move anything.
    #[test]
    fn balanced_shards_block_one_sided_moves() {
        let cands = vec![vec![cand(0, 1, 3)], vec![]];
        assert!(build_matrix(&cands, &[10, 10]).is_identity());
    }

    #[test]
    fn symmetric_input_gives_symmetric_matrix() {
        let cands = vec![
            vec![cand(0, 1, 2), cand(1, 2, 2)],
            vec![cand(2, 2, 2), cand(3, 0, 2)],
            vec![cand(4, 0, 2), cand(5, 1, 2)],
        ];
        let m = build_matrix(&cands, &[10, 10, 10]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - m.get(j, i)).abs() < 1e-12);
            }
        }
        assert!(m.is_row_stochastic(1e-12));
    }

    #[test]
    fn rows_sum_to_one() {
        let cands = vec![
            vec![cand(0, 1, 4), cand(1, 2, 1), cand(2, 1, 7)],
            vec![cand(3, 0, 2)],
            vec![],
        ];
        let m = build_matrix(&cands, &[40, 12, 5]);
        assert!(m.is_row_stochastic(1e-12));
    }

    #[test]
    fn identity_exchange_moves_nothing() {
        let part = vec![0, 1, 0, 1];
        let cands = vec![vec![cand(0, 1, 1)], vec![cand(1, 0, 1)]];
        let out = exchange(&part, &cands, &ProbabilityMatrix::identity(2), 7);
        assert_eq!(out, part);
    }

    #[test]
    fn certain_move() {
        let part = vec![0, 1, 1];
        let cands = vec![vec![cand(0, 2, 1)], vec![], vec![]];
        let m = ProbabilityMatrix::from_rows(vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert_eq!(exchange(&part, &cands, &m, 3), vec![2, 1, 1]);
    }

    #[test]
    fn exchange_is_reproducible() {
        let part: Vec<usize> = (0..50).map(|v| v % 2).collect();
        let cands = vec![
            (0..50).step_by(2).map(|v| cand(v, 1, 1)).collect(),
            (1..50).step_by(2).map(|v| cand(v, 0, 1)).collect(),
        ];
        let m = ProbabilityMatrix::from_rows(vec![vec![0.6, 0.4], vec![0.3, 0.7]]);
        let a = exchange(&part, &cands, &m, 99);
        assert_eq!(a, exchange(&part, &cands, &m, 99));
        assert_ne!(a, exchange(&part, &cands, &m, 100));
    }

    // Mean moved weight over many seeds matches the matrix-implied flow
    // within three standard errors.
    #[test]
    fn expected_moved_weight_matches_matrix() {
        let weights = [1i64, 3, 2, 5, 4, 1, 2, 6];
        let cands = vec![
            weights.iter().enumerate().map(|(v, &w)| cand(v, 1 + v % 2, w)).collect(),
            vec![],
            vec![],
        ];
        let part: Vec<usize> = vec![0; weights.len()];
        let m = build_matrix(&cands, &[60, 10, 20]);

        let n = cands[0].len() as f64;
        let mut expected = 0.0;
        let mut var = 0.0;
        for c in &cands[0] {
            let q = cands[0].iter().filter(|d| d.target == c.target).count() as f64 / n;
            let p = (m.get(0, c.target) / q).min(1.0);
            expected += p * c.weight as f64;
            var += p * (1.0 - p) * (c.weight * c.weight) as f64;
        }
        assert!(expected > 0.0);

        let trials = 1000;
        let mut total = 0.0;
        for seed in 0..trials {
            let out = exchange(&part, &cands, &m, seed);
            total += out
                .iter()
                .zip(&weights)
                .filter(|(&s, _)| s != 0)
                .map(|(_, &w)| w as f64)
                .sum::<f64>();
        }
        let mean = total / trials as f64;
        let se = (var / trials as f64).sqrt();
        assert!((mean - expected).abs() <= 3.0 * se, "mean {mean} expected {expected} se {se}");
    }

    #[test]
    fn repartition_improves_cut_on_swapped_pair() {
        // Two triangles with one vertex of each placed on the wrong side.
        let g = unit_graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let part = vec![0, 0, 1, 1, 1, 0];
        let cfg = PartitionerConfig {
            k: 2,
            kl_rounds: 1,
            ..Default::default()
        };
        let out = kl_repartition(&g, &part, &cfg);
        assert_eq!(g.cut_weight(&out), 0);
        assert_eq!(out, vec![0, 0, 0, 1, 1, 1]);
    }
}
