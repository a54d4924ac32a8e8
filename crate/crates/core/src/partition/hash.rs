//! Hash placement.
//!
//! The hash is FNV-1a over the 20 address bytes, with the seed XORed into
//! the offset basis, followed by the MurmurHash3 64-bit finalizer:
//!
//! ```text
//! h = 0xcbf29ce484222325 ^ seed
//! for b in address: h = (h ^ b) * 0x100000001b3        (mod 2^64)
//! h ^= h >> 33; h *= 0xff51afd7ed558ccd
//! h ^= h >> 33; h *= 0xc4ceb9fe1a85ec53
//! h ^= h >> 33
//! shard = h mod k
//! ```
//!
//! Nothing here depends on the platform, so ports in other languages
//! reproduce the same placement.

use super::PartitionerConfig;
use crate::trace::VertexId;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn address_hash(id: &VertexId, seed: u64) -> u64 {
    let mut h = FNV_OFFSET ^ seed;
    for &b in id.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    fmix64(h)
}

fn fmix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

pub fn hash_partition(id: &VertexId, cfg: &PartitionerConfig) -> usize {
    (address_hash(id, cfg.hash_seed) % cfg.k as u64) as usize
}
