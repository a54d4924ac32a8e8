//! Placement of vertices seen for the first time.

/// Picks a shard for a new vertex.
///
/// `neighbors` lists the shards of the already-placed vertices it interacted
/// with in its transaction, each with the number of interactions. The shard
/// holding the most interactions wins, since placing the vertex there cuts the
/// fewest edges. Ties go to the lightest shard by `loads`, then the lowest
/// index. Without placed neighbors the lightest shard is chosen.
pub fn assign_new_vertex(neighbors: &[(usize, u64)], loads: &[u64]) -> usize {
    let k = loads.len();
    assert!(k >= 1);
    let mut affinity = vec![0u64; k];
    for &(shard, mult) in neighbors {
        affinity[shard] += mult;
    }
    (0..k)
        .min_by_key(|&s| (std::cmp::Reverse(affinity[s]), loads[s], s))
        .unwrap_or(0)
}
