//! Synthetic workloads with planted communities and skewed activity.
//!
//! Vertex `v` has popularity rank `v`, so its sampling weight is
//! `1 / (v + 1)^zipf_exponent`. Communities have equal vertex counts; the
//! [`CommunityLayout`] decides whether they also get similar activity.
//!
//! Each transaction picks an account sender by popularity. The receiver is
//! drawn by popularity from the sender's community with probability
//! `intra_probability`, otherwise from a uniformly chosen other community.
//! A contract's first appearance is its creation. A call into a contract may
//! trigger one internal call from that contract to a member of its own
//! community.

use std::io::{self, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::trace::{CallKind, TraceRecord, VertexId, VertexKind};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid workload: {0}")]
    Invalid(String),
}

/// How popularity ranks are spread over communities. Every layout gives
/// communities equal vertex counts (up to one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CommunityLayout {
    /// Vertex `v` joins community `v mod communities`, dealing popularity
    /// ranks round-robin. The community holding the top vertex still
    /// carries noticeably more activity than the rest.
    #[default]
    Interleaved,
    /// Communities are contiguous popularity bands, so the first holds the
    /// most active vertices.
    Blocked,
    /// Membership is a seeded random permutation.
    Random,
}

/// A mid-trace change of community membership.
#[derive(Debug, Clone, PartialEq)]
pub struct Rewire {
    /// Seconds after the trace start.
    pub at: u64,
    /// Fraction of vertices given a new, different community.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub vertices: usize,
    pub communities: usize,
    pub layout: CommunityLayout,
    pub intra_probability: f64,
    pub zipf_exponent: f64,
    /// Fraction of vertices that are contracts.
    pub contract_fraction: f64,
    /// Chance that a call into an existing contract makes one internal call.
    pub internal_call_probability: f64,
    /// Trace length in seconds.
    pub duration: u64,
    pub records_per_hour: u64,
    pub start_timestamp: u64,
    pub rewire: Option<Rewire>,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            vertices: 10_000,
            communities: 8,
            layout: CommunityLayout::Interleaved,
            intra_probability: 0.9,
            zipf_exponent: 1.0,
            contract_fraction: 0.1,
            internal_call_probability: 0.3,
            duration: 28 * 24 * 3_600,
            records_per_hour: 150,
            start_timestamp: 1_500_000_000,
            rewire: None,
            seed: 0,
        }
    }
}

impl WorkloadSpec {
    pub fn total_records(&self) -> u64 {
        self.duration * self.records_per_hour / 3_600
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Invalid(m.to_string()));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.vertices < 2 {
            return bad("need at least two vertices");
        }
        if self.communities == 0 || self.communities > self.vertices {
            return bad("community count must be between 1 and the vertex count");
        }
        if !prob(self.intra_probability) || !prob(self.contract_fraction) || !prob(self.internal_call_probability) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(self.zipf_exponent >= 0.0) || !self.zipf_exponent.is_finite() {
            return bad("Zipf exponent must be finite and non-negative");
        }
        if self.duration == 0 || self.records_per_hour == 0 {
            return bad("duration and rate must be positive");
        }
        if self.total_records() == 0 {
            return bad("duration and rate produce no records");
        }
        if let Some(r) = &self.rewire {
            if !prob(r.fraction) || r.at >= self.duration {
                return bad("rewire must happen inside the trace with a fraction in [0, 1]");
            }
            if self.communities < 2 {
                return bad("rewiring needs at least two communities");
            }
        }
        Ok(())
    }
}

/// A generated trace and the planted ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrace {
    pub records: Vec<TraceRecord>,
    pub ids: Vec<VertexId>,
    pub is_contract: Vec<bool>,
    pub community: Vec<usize>,
    /// Membership after the rewire; equal to `community` without one.
    pub community_after: Vec<usize>,
}

/// Popularity sampler per community, rebuilt when membership changes.
struct Samplers {
    members: Vec<Vec<usize>>,
    dists: Vec<WeightedIndex<f64>>,
}

impl Samplers {
    fn new(community: &[usize], c: usize, weight: &[f64]) -> Self {
        let mut members = vec![Vec::new(); c];
        for (v, &cv) in community.iter().enumerate() {
            members[cv].push(v);
        }
        let dists = members
            .iter()
            .map(|m| WeightedIndex::new(m.iter().map(|&v| weight[v])).expect("non-empty community"))
            .collect();
        Samplers { members, dists }
    }

    fn sample(&self, c: usize, rng: &mut ChaCha8Rng) -> usize {
        self.members[c][self.dists[c].sample(rng)]
    }
}

pub fn synth_trace(spec: &WorkloadSpec) -> Result<SynthTrace, SynthError> {
    spec.validate()?;
    let n = spec.vertices;
    let c = spec.communities;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let ids: Vec<VertexId> = (0..n).map(|_| VertexId(rng.gen())).collect();
    let community: Vec<usize> = match spec.layout {
        CommunityLayout::Interleaved => (0..n).map(|v| v % c).collect(),
        CommunityLayout::Blocked => (0..n).map(|v| v * c / n).collect(),
        CommunityLayout::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut community = vec![0; n];
            for (pos, &v) in order.iter().enumerate() {
                community[v] = pos % c;
            }
            community
        }
    };
    let weight: Vec<f64> = (0..n).map(|v| ((v + 1) as f64).powf(-spec.zipf_exponent)).collect();
    // The most popular vertex is always an account so senders exist.
    let is_contract: Vec<bool> = (0..n).map(|v| v > 0 && rng.gen_bool(spec.contract_fraction)).collect();
    let sender_dist = WeightedIndex::new((0..n).map(|v| if is_contract[v] { 0.0 } else { weight[v] }))
        .expect("at least one account");

    let mut current = community.clone();
    let mut samplers = Samplers::new(&current, c, &weight);
    let mut rewire = spec.rewire.clone();
    let mut created = vec![false; n];

    let total = spec.total_records();
    let mut records = Vec::with_capacity(total as usize);
    let mut tx = 0u64;
    while (records.len() as u64) < total {
        let elapsed = records.len() as u64 * 3_600 / spec.records_per_hour;
        if let Some(r) = rewire.as_ref().filter(|r| elapsed >= r.at) {
            for v in 0..n {
                if rng.gen_bool(r.fraction) {
                    let shift = rng.gen_range(1..c);
                    current[v] = (current[v] + shift) % c;
                }
            }
            // A community must not be left empty.
            for cc in 0..c {
                if !current.contains(&cc) {
                    current[cc] = cc;
                }
            }
            samplers = Samplers::new(&current, c, &weight);
            rewire = None;
        }
        let timestamp = spec.start_timestamp + elapsed;
        let block = elapsed / 15;
        let tx_id = format!("0x{tx:016x}");
        tx += 1;

        let sender = sender_dist.sample(&mut rng);
        let receiver = pick_partner(sender, &current, &samplers, spec, &mut rng);
        let emit = |from: usize, to: usize, created: &mut Vec<bool>, records: &mut Vec<TraceRecord>| {
            let call_kind = if !is_contract[to] {
                CallKind::Transfer
            } else if !created[to] {
                created[to] = true;
                CallKind::ContractCreate
            } else {
                CallKind::ContractCall
            };
            records.push(TraceRecord {
                timestamp,
                block,
                from: ids[from],
                from_kind: kind(is_contract[from]),
                to: ids[to],
                to_kind: kind(is_contract[to]),
                call_kind,
                tx_id: tx_id.clone(),
            });
            call_kind
        };
        let call = emit(sender, receiver, &mut created, &mut records);
        if call == CallKind::ContractCall
            && (records.len() as u64) < total
            && rng.gen_bool(spec.internal_call_probability)
        {
            let mut callee = samplers.sample(current[receiver], &mut rng);
            if callee == receiver {
                callee = sender;
            }
            emit(receiver, callee, &mut created, &mut records);
        }
    }

    Ok(SynthTrace {
        records,
        ids,
        is_contract,
        community,
        community_after: current,
    })
}

fn kind(contract: bool) -> VertexKind {
    if contract {
        VertexKind::Contract
    } else {
        VertexKind::Account
    }
}

fn pick_partner(
    sender: usize,
    current: &[usize],
    samplers: &Samplers,
    spec: &WorkloadSpec,
    rng: &mut ChaCha8Rng,
) -> usize {
    let c = spec.communities;
    for _ in 0..64 {
        let target = if c == 1 || rng.gen_bool(spec.intra_probability) {
            current[sender]
        } else {
            (current[sender] + rng.gen_range(1..c)) % c
        };
        let v = samplers.sample(target, rng);
        if v != sender {
            return v;
        }
    }
    // The sender is alone in its community.
    (sender + rng.gen_range(1..current.len())) % current.len()
}

/// Writes `address,community,community_after` rows.
pub fn write_ground_truth<W: Write>(out: W, t: &SynthTrace) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["address", "community", "community_after"])?;
    for v in 0..t.ids.len() {
        w.write_record([
            t.ids[v].to_string(),
            t.community[v].to_string(),
            t.community_after[v].to_string(),
        ])?;
    }
    w.flush()
}
