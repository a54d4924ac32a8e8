//! Trace-replay framework for comparing blockchain sharding strategies.
//!
//! A trace of timestamped account interactions is replayed into a growing
//! interaction graph. A sharding strategy assigns every vertex to one of `k`
//! shards and may repartition as the replay proceeds. Edge-cut and balance
//! are measured per time window, both over the whole graph and over the
//! window's activity, along with the number of vertices each repartition
//! relocates.
//!
//! ```
//! use shardsim::{run_replay, ReplayConfig, Strategy, TraceRecord};
//!
//! let csv = "timestamp,block,from,from_kind,to,to_kind,call_kind,tx_id\n\
//!            0,0,0x00000000000000000000000000000000000000a1,account,\
//!            0x00000000000000000000000000000000000000b2,account,transfer,t1\n";
//! let trace: Vec<TraceRecord> = shardsim::parse_trace(csv.as_bytes(), shardsim::TraceFormat::Csv,
//!     shardsim::ErrorPolicy::Strict).unwrap().records;
//! let result = run_replay(&trace, &ReplayConfig::new(2, Strategy::Hashing)).unwrap();
//! assert_eq!(result.samples.len(), 1);
//! ```

pub mod graph;
pub mod metrics;
pub mod partition;
pub mod replay;
pub mod report;
pub mod synth;
pub mod trace;

pub use graph::{InteractionGraph, RecordLog, VertexWeighting, WeightedGraph, WindowActivity};
pub use metrics::{balance, edge_cut, normalized_balance, Assignment, MetricSample, Weighting};
pub use partition::{
    hash_partition, kl_repartition, multilevel_partition, MultilevelOutcome, PartitionerConfig,
};
pub use replay::{run_replay, ReplayConfig, ReplayError, ReplayResult, Strategy, WeightMode};
pub use report::{summarize, SummaryStats};
pub use trace::{
    parse_trace, read_trace_file, CallKind, ErrorPolicy, ParsedTrace, TraceError, TraceFormat, TraceRecord,
    VertexId, VertexKind,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/trace-format.md")]
    mod trace_format {}
    #[doc = include_str!("../../../book/src/graph.md")]
    mod graph {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/hashing.md")]
    mod hashing {}
    #[doc = include_str!("../../../book/src/kl.md")]
    mod kl {}
    #[doc = include_str!("../../../book/src/multilevel.md")]
    mod multilevel {}
    #[doc = include_str!("../../../book/src/replay.md")]
    mod replay {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
