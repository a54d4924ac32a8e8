//! `shardsim` command-line driver.
//!
//! Exit status is 0 on success, 2 for usage errors (bad flags or an invalid
//! configuration) and 1 for everything else, chiefly unreadable or malformed
//! input files. Set `SHARDSIM_LOG` (e.g. `info`, `debug`) for diagnostics.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use shardsim::graph::{read_id_sidecar, write_id_sidecar};
use shardsim::partition::max_part_weight;
use shardsim::report::{
    format_summary, read_rows_csv, read_rows_json, rows, summarize, summarize_rows, write_rows_csv,
    write_rows_json, ReportRow,
};
use shardsim::synth::{synth_trace, write_ground_truth, CommunityLayout, Rewire, WorkloadSpec};
use shardsim::trace::{validate_kinds, write_trace_csv, write_trace_jsonl, KindWarning};
use shardsim::{
    multilevel_partition, read_trace_file, ErrorPolicy, PartitionerConfig, ReplayConfig, ReplayError, Strategy,
    TraceFormat, TraceRecord, VertexWeighting, WeightMode, WeightedGraph,
};

mod duration;

use duration::parse_duration;

#[derive(Parser)]
#[command(name = "shardsim", version, about = "Replay interaction traces against sharding strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace and write one row of metrics per window.
    Replay(ReplayArgs),
    /// Partition a graph given in adjacency format.
    Partition(PartitionArgs),
    /// Generate a synthetic trace with planted communities.
    Synth(SynthArgs),
    /// Print a quartile table for a per-window metrics file.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TraceFormat::Csv,
            FormatArg::Jsonl => TraceFormat::Jsonl,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Hashing,
    Kl,
    MetisFull,
    MetisWindow,
    MetisThreshold,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Hashing => Strategy::Hashing,
            StrategyArg::Kl => Strategy::Kl,
            StrategyArg::MetisFull => Strategy::MetisFull,
            StrategyArg::MetisWindow => Strategy::MetisWindow,
            StrategyArg::MetisThreshold => Strategy::MetisThreshold,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Window,
    Cumulative,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Interleaved,
    Blocked,
    Random,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long, value_name = "PATH")]
    trace: PathBuf,
    /// Trace format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<FormatArg>,
    #[arg(long, value_name = "K", default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    shards: u32,
    #[arg(long, value_enum, default_value_t = StrategyArg::Hashing)]
    strategy: StrategyArg,
    #[arg(long, value_name = "DUR", default_value = "4h", value_parser = parse_duration)]
    metric_window: u64,
    #[arg(long, value_name = "DUR", default_value = "14d", value_parser = parse_duration)]
    repartition_interval: u64,
    #[arg(long, value_name = "F", default_value_t = 0.3)]
    cut_threshold: f64,
    #[arg(long, value_name = "F", default_value_t = 1.8)]
    balance_threshold: f64,
    /// Allowed imbalance of the multilevel partitioner.
    #[arg(long, value_name = "F", default_value_t = 0.05)]
    epsilon: f64,
    /// Seed for hashing and for the randomized partitioners.
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = WeightsArg::Window)]
    weights: WeightsArg,
    /// Skip malformed rows instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Output file; rows go to stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    out_format: OutFormat,
    /// Run one replay per shard count in parallel, e.g. `k=2,4,8`. Each
    /// writes to `--out` with `.k<K>` inserted before the extension.
    #[arg(long, value_name = "k=LIST", value_parser = parse_sweep)]
    sweep: Option<Sweep>,
    /// Write the final graph in adjacency format, plus `<PATH>.ids`.
    #[arg(long, value_name = "PATH")]
    export_graph: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    /// Graph in adjacency format.
    #[arg(long, value_name = "PATH")]
    graph: PathBuf,
    /// Vertex id sidecar; switches the output to `address,shard` rows.
    #[arg(long, value_name = "PATH")]
    ids: Option<PathBuf>,
    #[arg(long, value_name = "K", default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    shards: u32,
    #[arg(long, value_name = "F", default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Output file, one shard per line; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    vertices: usize,
    #[arg(long, default_value_t = 8)]
    communities: usize,
    #[arg(long, value_enum, default_value_t = LayoutArg::Interleaved)]
    layout: LayoutArg,
    /// Chance that an interaction stays inside the sender's community.
    #[arg(long, value_name = "P", default_value_t = 0.9)]
    intra: f64,
    #[arg(long, value_name = "S", default_value_t = 1.0)]
    zipf: f64,
    #[arg(long, value_name = "P", default_value_t = 0.1)]
    contract_fraction: f64,
    #[arg(long, value_name = "P", default_value_t = 0.3)]
    internal_calls: f64,
    #[arg(long, value_name = "DUR", default_value = "28d", value_parser = parse_duration)]
    duration: u64,
    #[arg(long, default_value_t = 150)]
    records_per_hour: u64,
    #[arg(long, value_name = "UNIX", default_value_t = 1_500_000_000)]
    start: u64,
    /// Time after the start at which membership changes.
    #[arg(long, value_name = "DUR", value_parser = parse_duration, requires = "rewire_fraction")]
    rewire_at: Option<u64>,
    #[arg(long, value_name = "P", requires = "rewire_at")]
    rewire_fraction: Option<f64>,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Trace output; `.jsonl` selects JSON lines. Stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Ground-truth community file.
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Metrics file written by `replay`.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    in_format: Option<OutFormat>,
}

/// Bad flag values or configuration, reported with exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Shard counts of a `--sweep`.
#[derive(Debug, Clone)]
struct Sweep(Vec<u32>);

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let list = s.strip_prefix("k=").ok_or("expected k=LIST, e.g. k=2,4,8")?;
    let ks = list
        .split(',')
        .map(|t| match t.trim().parse::<u32>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(format!("invalid shard count {t:?}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if ks.is_empty() {
        return Err("empty sweep".into());
    }
    Ok(Sweep(ks))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SHARDSIM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Replay(a) => replay(a),
        Command::Partition(a) => partition(a),
        Command::Synth(a) => synth(a),
        Command::Summarize(a) => summarize_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<UsageError>() { 2 } else { 1 })
        }
    }
}

/// Opens `path` for writing, or stdout.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn replay_config(a: &ReplayArgs, k: usize) -> ReplayConfig {
    let mut cfg = ReplayConfig::new(k, a.strategy.into());
    cfg.metric_window = a.metric_window;
    cfg.repartition_interval = a.repartition_interval;
    cfg.cut_threshold = a.cut_threshold;
    cfg.balance_threshold = a.balance_threshold;
    cfg.partitioner.epsilon = a.epsilon;
    cfg.partitioner.hash_seed = a.seed;
    cfg.partitioner.rng_seed = a.seed;
    cfg.weight_mode = match a.weights {
        WeightsArg::Window => WeightMode::Window,
        WeightsArg::Cumulative => WeightMode::Cumulative,
    };
    cfg
}

fn load_trace(path: &Path, format: Option<FormatArg>, lenient: bool) -> Result<Vec<TraceRecord>> {
    let policy = if lenient { ErrorPolicy::Lenient } else { ErrorPolicy::Strict };
    let parsed = read_trace_file(path, format.map(Into::into), policy)
        .with_context(|| format!("cannot read trace {}", path.display()))?;
    if parsed.skipped > 0 {
        log::warn!("skipped {} of {} rows", parsed.skipped, parsed.total_rows);
    }
    for w in validate_kinds(&parsed.records, policy).context("inconsistent vertex kinds")? {
        match w {
            KindWarning::UseBeforeCreate(id) => log::warn!("contract {id} used before its creation"),
            KindWarning::ContractWithoutIncoming(id) => log::debug!("contract {id} never called"),
        }
    }
    log::info!("loaded {} records from {}", parsed.records.len(), path.display());
    Ok(parsed.records)
}

/// `out.csv` with `k = 4` becomes `out.k4.csv`.
fn sweep_path(out: &Path, k: u32) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.k{k}.{}", ext.to_string_lossy()),
        None => format!("{stem}.k{k}"),
    };
    out.with_file_name(name)
}

fn write_rows(out: Box<dyn Write>, rows: &[ReportRow], format: OutFormat) -> Result<()> {
    match format {
        OutFormat::Csv => write_rows_csv(out, rows)?,
        OutFormat::Json => write_rows_json(out, rows)?,
    }
    Ok(())
}

fn replay(a: ReplayArgs) -> Result<()> {
    let ks: Vec<u32> = a.sweep.clone().map_or_else(|| vec![a.shards], |s| s.0);
    if a.sweep.is_some() && a.out.is_none() {
        return Err(usage("--sweep needs --out"));
    }
    if a.sweep.is_some() && a.export_graph.is_some() {
        return Err(usage("--export-graph cannot be combined with --sweep"));
    }
    let configs: Vec<ReplayConfig> = ks.iter().map(|&k| replay_config(&a, k as usize)).collect();
    for cfg in &configs {
        cfg.validate().map_err(|e| usage(e.to_string()))?;
    }
    let trace = load_trace(&a.trace, a.format, a.lenient)?;

    let results: Vec<Result<shardsim::ReplayResult, ReplayError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| s.spawn(|| shardsim::run_replay(&trace, cfg)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("replay thread panicked")).collect()
    });

    for ((&k, cfg), result) in ks.iter().zip(&configs).zip(results) {
        let result = result.with_context(|| format!("replay with k={k} failed"))?;
        let k = cfg.k;
        log::info!(
            "k={k} {}: {} windows, {} repartitions, {} moves",
            cfg.strategy,
            result.samples.len(),
            result.repartition_timestamps.len(),
            result.total_moves
        );
        if result.infeasible_partitions > 0 {
            log::warn!("{} repartitions exceeded the balance bound", result.infeasible_partitions);
        }
        let path = match (&a.sweep, &a.out) {
            (Some(_), Some(out)) => Some(sweep_path(out, k as u32)),
            (_, out) => out.clone(),
        };
        write_rows(output(path.as_deref())?, &rows(&result.samples, k), a.out_format)?;
        if path.is_some() && !result.samples.is_empty() {
            let summary = summarize(&result.samples, k)?;
            if a.sweep.is_some() {
                println!("k={k}");
            }
            print!("{}", format_summary(&summary));
        }
        if let Some(gpath) = &a.export_graph {
            export_graph(&result.graph, gpath)?;
        }
    }
    Ok(())
}

fn export_graph(graph: &shardsim::InteractionGraph, path: &Path) -> Result<()> {
    let mut out = output(Some(path))?;
    graph.to_weighted(VertexWeighting::Activity).write_adjacency(&mut out)?;
    out.flush()?;
    let mut ids_path = path.as_os_str().to_owned();
    ids_path.push(".ids");
    let ids_path = PathBuf::from(ids_path);
    write_id_sidecar(output(Some(&ids_path))?, graph.ids())?;
    log::info!("graph written to {} and {}", path.display(), ids_path.display());
    Ok(())
}

fn partition(a: PartitionArgs) -> Result<()> {
    if !(a.epsilon >= 0.0) {
        return Err(usage("--epsilon must be non-negative"));
    }
    let open = |p: &Path| -> Result<BufReader<File>> {
        Ok(BufReader::new(File::open(p).with_context(|| format!("cannot open {}", p.display()))?))
    };
    let g = WeightedGraph::read_adjacency(open(&a.graph)?)
        .with_context(|| format!("cannot parse {}", a.graph.display()))?;
    let ids = match &a.ids {
        Some(p) => {
            let ids = read_id_sidecar(open(p)?).with_context(|| format!("cannot parse {}", p.display()))?;
            if ids.len() != g.num_vertices() {
                bail!("{} lists {} ids for {} vertices", p.display(), ids.len(), g.num_vertices());
            }
            Some(ids)
        }
        None => None,
    };

    let k = a.shards as usize;
    let cfg = PartitionerConfig {
        k,
        epsilon: a.epsilon,
        rng_seed: a.seed,
        hash_seed: a.seed,
        ..PartitionerConfig::default()
    };
    let outcome = multilevel_partition(&g, &cfg);
    let mut out = output(a.out.as_deref())?;
    match &ids {
        Some(ids) => {
            writeln!(out, "address,shard")?;
            for (id, p) in ids.iter().zip(&outcome.part) {
                writeln!(out, "{id},{p}")?;
            }
        }
        None => {
            for p in &outcome.part {
                writeln!(out, "{p}")?;
            }
        }
    }
    out.flush()?;

    let total = g.total_vertex_weight();
    let cut_share = if g.total_edge_weight() > 0 {
        outcome.cut as f64 / g.total_edge_weight() as f64
    } else {
        0.0
    };
    eprintln!(
        "cut {} ({:.4} of edge weight), part weights {:?}, bound {}{}",
        outcome.cut,
        cut_share,
        outcome.part_weights,
        max_part_weight(total, k, a.epsilon),
        if outcome.infeasible { ", bound exceeded" } else { "" }
    );
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = WorkloadSpec {
        vertices: a.vertices,
        communities: a.communities,
        layout: match a.layout {
            LayoutArg::Interleaved => CommunityLayout::Interleaved,
            LayoutArg::Blocked => CommunityLayout::Blocked,
            LayoutArg::Random => CommunityLayout::Random,
        },
        intra_probability: a.intra,
        zipf_exponent: a.zipf,
        contract_fraction: a.contract_fraction,
        internal_call_probability: a.internal_calls,
        duration: a.duration,
        records_per_hour: a.records_per_hour,
        start_timestamp: a.start,
        rewire: a.rewire_at.zip(a.rewire_fraction).map(|(at, fraction)| Rewire { at, fraction }),
        seed: a.seed,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let trace = synth_trace(&spec).map_err(|e| usage(e.to_string()))?;
    let jsonl = a
        .out
        .as_deref()
        .is_some_and(|p| TraceFormat::from_path(p) == Some(TraceFormat::Jsonl));
    let out = output(a.out.as_deref())?;
    if jsonl {
        write_trace_jsonl(out, &trace.records)?;
    } else {
        write_trace_csv(out, &trace.records)?;
    }
    if let Some(p) = &a.truth {
        write_ground_truth(output(Some(p))?, &trace)?;
    }
    log::info!("generated {} records over {} vertices", trace.records.len(), trace.ids.len());
    Ok(())
}

fn summarize_cmd(a: SummarizeArgs) -> Result<()> {
    let format = match a.in_format {
        Some(f) => f,
        None if a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => OutFormat::Json,
        None => OutFormat::Csv,
    };
    let file = File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
    let rows = match format {
        OutFormat::Csv => read_rows_csv(BufReader::new(file)),
        OutFormat::Json => read_rows_json(BufReader::new(file)),
    }
    .with_context(|| format!("cannot parse {}", a.input.display()))?;
    if rows.is_empty() {
        bail!("{} holds no windows", a.input.display());
    }
    print!("{}", format_summary(&summarize_rows(&rows)?));
    Ok(())
}
