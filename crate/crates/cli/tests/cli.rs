use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn shardsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shardsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Three days of a 300-vertex workload.
fn small_trace(dir: &TempDir) -> PathBuf {
    let trace = dir.path().join("t.csv");
    let out = shardsim(&[
        "synth",
        "--vertices",
        "300",
        "--communities",
        "4",
        "--duration",
        "3d",
        "--records-per-hour",
        "120",
        "--seed",
        "5",
        "--out",
        path_str(&trace),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    trace
}

#[test]
fn replay_writes_one_row_per_window() {
    let dir = TempDir::new().unwrap();
    let trace = small_trace(&dir);
    let samples = dir.path().join("s.csv");
    let out = shardsim(&[
        "replay",
        "--trace",
        path_str(&trace),
        "--shards",
        "2",
        "--strategy",
        "metis-full",
        "--repartition-interval",
        "1d",
        "--out",
        path_str(&samples),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&samples).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("window_start,static_edge_cut,dynamic_edge_cut,static_balance,dynamic_balance,normalized_dynamic_balance,moves,repartitioned")
    );
    // 72 hours in 4-hour windows.
    assert_eq!(lines.count(), 18);
    assert!(String::from_utf8_lossy(&out.stdout).contains("dynamic_edge_cut"));
}

#[test]
fn rows_go_to_stdout_without_out() {
    let dir = TempDir::new().unwrap();
    let trace = small_trace(&dir);
    let out = shardsim(&["replay", "--trace", path_str(&trace), "--metric-window", "1d"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
}

#[test]
fn summarize_prints_quartiles() {
    let dir = TempDir::new().unwrap();
    let trace = small_trace(&dir);
    let samples = dir.path().join("s.json");
    let out = shardsim(&[
        "replay",
        "--trace",
        path_str(&trace),
        "--out",
        path_str(&samples),
        "--out-format",
        "json",
    ]);
    assert!(out.status.success());
    let out = shardsim(&["summarize", "--in", path_str(&samples)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.starts_with("metric"));
    for name in ["static_edge_cut", "dynamic_edge_cut", "normalized_dynamic_balance"] {
        assert!(table.contains(name), "{table}");
    }
    assert!(table.contains("windows 18"));
}

#[test]
fn json_mirrors_csv() {
    let dir = TempDir::new().unwrap();
    let trace = small_trace(&dir);
    let run = |fmt: &str| {
        let out = shardsim(&["replay", "--trace", path_str(&trace), "--strategy", "kl", "--out-format", fmt]);
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let csv = run("csv");
    let json: Vec<serde_like::Row> = serde_like::parse(&run("json"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), json.len());
    for (line, row) in rows.iter().zip(&json) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], row.window_start);
        assert_eq!(fields[2], row.dynamic_edge_cut);
        assert_eq!(fields[7], row.repartitioned);
    }
}

/// Just enough JSON picking to compare a few fields textually.
mod serde_like {
    pub struct Row {
        pub window_start: String,
        pub dynamic_edge_cut: String,
        pub repartitioned: String,
    }

    fn field(obj: &str, name: &str) -> String {
        let key = format!("\"{name}\":");
        let start = obj.find(&key).unwrap() + key.len();
        obj[start..]
            .trim_start()
            .split([',', '\n', '}'])
            .next()
            .unwrap()
            .trim()
            .to_string()
    }

    pub fn parse(text: &str) -> Vec<Row> {
        text.split('{')
            .skip(1)
            .map(|obj| Row {
                window_start: field(obj, "window_start"),
                dynamic_edge_cut: field(obj, "dynamic_edge_cut"),
                repartitioned: field(obj, "repartitioned"),
            })
            .collect()
    }
}

#[test]
fn zero_shards_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let trace = small_trace(&dir);
    let out = shardsim(&["replay", "--trace", path_str(&trace), "--shards", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_configuration_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let trace = small_trace(&dir);
    let out = shardsim(&["replay", "--trace", path_str(&trace), "--metric-window", "5h"]);
    assert_eq!(out.status.code(), Some(2));
    let out = shardsim(&["replay", "--trace", path_str(&trace), "--metric-window", "4y"]);
    assert_eq!(out.status.code(), Some(2));
    let out = shardsim(&["synth", "--communities", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_or_malformed_input_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = shardsim(&["replay", "--trace", path_str(&dir.path().join("absent.csv"))]);
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.csv");
    fs::write(
        &bad,
        "timestamp,block,from,from_kind,to,to_kind,call_kind,tx_id\nnot-a-number,0,a,account,b,account,transfer,x\n",
    )
    .unwrap();
    let out = shardsim(&["replay", "--trace", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn lenient_skips_bad_rows() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.csv");
    let good = "0,0,00000000000000000000000000000000000000a1,account,00000000000000000000000000000000000000b2,account,transfer,t1";
    fs::write(
        &trace,
        format!("timestamp,block,from,from_kind,to,to_kind,call_kind,tx_id\n{good}\ngarbage\n"),
    )
    .unwrap();
    assert_eq!(shardsim(&["replay", "--trace", path_str(&trace)]).status.code(), Some(1));
    let out = shardsim(&["replay", "--trace", path_str(&trace), "--lenient"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
}

#[test]
fn empty_trace_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("empty.csv");
    fs::write(&trace, "timestamp,block,from,from_kind,to,to_kind,call_kind,tx_id\n").unwrap();
    let out = shardsim(&["replay", "--trace", path_str(&trace), "--strategy", "metis-window"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn sweep_matches_single_runs() {
    let dir = TempDir::new().unwrap();
    let trace = small_trace(&dir);
    let base = dir.path().join("sweep.csv");
    let out = shardsim(&[
        "replay",
        "--trace",
        path_str(&trace),
        "--strategy",
        "metis-window",
        "--repartition-interval",
        "1d",
        "--sweep",
        "k=2,4,8",
        "--out",
        path_str(&base),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for k in ["2", "4", "8"] {
        let swept = fs::read(dir.path().join(format!("sweep.k{k}.csv"))).unwrap();
        let single = shardsim(&[
            "replay",
            "--trace",
            path_str(&trace),
            "--strategy",
            "metis-window",
            "--repartition-interval",
            "1d",
            "--shards",
            k,
        ]);
        assert_eq!(swept, single.stdout, "k={k}");
    }
    let out = shardsim(&["replay", "--trace", path_str(&trace), "--sweep", "k=2,4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exported_graph_can_be_partitioned() {
    let dir = TempDir::new().unwrap();
    let trace = small_trace(&dir);
    let graph = dir.path().join("g.txt");
    let out = shardsim(&["replay", "--trace", path_str(&trace), "--export-graph", path_str(&graph)]);
    assert!(out.status.success());
    let ids = dir.path().join("g.txt.ids");
    let n = fs::read_to_string(&ids).unwrap().lines().count();
    let header = fs::read_to_string(&graph).unwrap();
    assert!(header.starts_with(&format!("{n} ")));

    let parts = dir.path().join("p.csv");
    let out = shardsim(&[
        "partition",
        "--graph",
        path_str(&graph),
        "--ids",
        path_str(&ids),
        "--shards",
        "4",
        "--out",
        path_str(&parts),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&parts).unwrap();
    assert_eq!(text.lines().next(), Some("address,shard"));
    assert_eq!(text.lines().count(), n + 1);
    assert!(text.lines().skip(1).all(|l| matches!(l.rsplit(',').next(), Some("0" | "1" | "2" | "3"))));

    let plain = shardsim(&["partition", "--graph", path_str(&graph), "--shards", "4"]);
    assert_eq!(String::from_utf8(plain.stdout).unwrap().lines().count(), n);
}

#[test]
fn synth_is_deterministic_and_writes_truth() {
    let dir = TempDir::new().unwrap();
    let a = small_trace(&dir);
    let first = fs::read(&a).unwrap();
    let b = dir.path().join("b.jsonl");
    let truth = dir.path().join("truth.csv");
    let out = shardsim(&[
        "synth",
        "--vertices",
        "300",
        "--communities",
        "4",
        "--duration",
        "3d",
        "--records-per-hour",
        "120",
        "--seed",
        "5",
        "--out",
        path_str(&b),
        "--truth",
        path_str(&truth),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read(small_trace(&dir)).unwrap(), first);
    let jsonl = fs::read_to_string(&b).unwrap();
    assert_eq!(jsonl.lines().count() + 1, String::from_utf8(first).unwrap().lines().count());
    let truth = fs::read_to_string(&truth).unwrap();
    assert_eq!(truth.lines().next(), Some("address,community,community_after"));
    assert_eq!(truth.lines().count(), 301);

    // The JSONL trace replays to the same rows as its CSV twin.
    let from_json = shardsim(&["replay", "--trace", path_str(&b)]);
    let from_csv = shardsim(&["replay", "--trace", path_str(&a)]);
    assert_eq!(from_json.stdout, from_csv.stdout);
}
