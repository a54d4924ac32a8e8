//! The partitioning strategies' algorithmic cores.
//!
//! * [`hash`]: identifier hashing, placement depends on the address alone.
//! * [`kl`]: candidate selection, the balancing probability matrix and the
//!   randomized exchange of the periodic Kernighan-Lin style repartitioner.
//! * [`multilevel`]: coarsen / initial partition / refine k-way partitioner.
//! * [`placement`]: where a vertex goes when it first appears.

pub mod hash;
pub mod kl;
pub mod multilevel;
pub mod placement;

pub use hash::{address_hash, hash_partition};
pub use kl::{build_matrix, exchange, kl_repartition, select_candidates, Candidate, ProbabilityMatrix};
pub use multilevel::{max_part_weight, multilevel_partition, MultilevelOutcome, RefineStats};
pub use placement::assign_new_vertex;

/// Knobs shared by all partitioners.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionerConfig {
    /// Number of shards.
    pub k: usize,
    /// Allowed imbalance: a shard may weigh up to `(1 + epsilon) × total / k`.
    pub epsilon: f64,
    pub hash_seed: u64,
    /// Candidate-selection / exchange sweeps per KL repartition.
    pub kl_rounds: usize,
    pub rng_seed: u64,
    /// Coarsening stops at `max(coarsen_per_shard × k, coarsen_min)` vertices.
    pub coarsen_min: usize,
    pub coarsen_per_shard: usize,
    /// Refinement pass cap per level.
    pub fm_passes: usize,
    /// Independent initial partitionings tried on the coarsest graph.
    pub initial_trials: usize,
}

impl PartitionerConfig {
    pub fn new(k: usize) -> Self {
        PartitionerConfig {
            k,
            ..Self::default()
        }
    }
}

impl Default for PartitionerConfig {
    fn default() -> Self {
        PartitionerConfig {
            k: 2,
            epsilon: 0.05,
            hash_seed: 0,
            kl_rounds: 1,
            rng_seed: 0,
            coarsen_min: 200,
            coarsen_per_shard: 30,
            fm_passes: 10,
            initial_trials: 8,
        }
    }
}

/// SplitMix64 step, used to derive independent sub-seeds from one seed.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
