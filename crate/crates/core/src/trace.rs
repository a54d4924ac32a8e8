//! Transaction-trace records and the CSV / JSONL readers and writers.
//!
//! A trace is a time-ordered list of caller→callee interactions. Every
//! record carries the transaction it belongs to, so the replay can group the
//! internal calls a contract makes on behalf of one user transaction.
//!
//! Canonical CSV layout (header required):
//!
//! ```text
//! timestamp,block,from,from_kind,to,to_kind,call_kind,tx_id
//! ```
//!
//! JSONL carries one object per line with the same field names. Addresses are
//! accepted with or without a `0x` prefix in any letter case and are always
//! written lowercase without the prefix.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CSV_HEADER: [&str; 8] = [
    "timestamp",
    "block",
    "from",
    "from_kind",
    "to",
    "to_kind",
    "call_kind",
    "tx_id",
];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: block number decreases")]
    OutOfOrderBlock { line: u64 },
    #[error("line {line}: unknown call kind {kind:?}")]
    UnknownCallKind { line: u64, kind: String },
    #[error("vertex {0} observed as both account and contract")]
    KindConflict(VertexId),
    #[error("contract {0} used before its creation record")]
    UseBeforeCreate(VertexId),
    #[error("cannot infer trace format from {0:?}; pass it explicitly")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// 160-bit account or contract address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub [u8; 20]);

impl VertexId {
    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseVertexIdError(String);

impl fmt::Display for ParseVertexIdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid address {:?}: expected 40 hex digits", self.0)
    }
}

impl std::error::Error for ParseVertexIdError {}

impl FromStr for VertexId {
    type Err = ParseVertexIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .unwrap_or(s);
        let err = || ParseVertexIdError(s.to_string());
        if hex.len() != 40 || !hex.is_ascii() {
            return Err(err());
        }
        let mut out = [0u8; 20];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).map_err(|_| err())?;
        }
        Ok(VertexId(out))
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VertexId({self})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Account,
    Contract,
}

impl VertexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::Account => "account",
            VertexKind::Contract => "contract",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "account" => Some(VertexKind::Account),
            "contract" => Some(VertexKind::Contract),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallKind {
    Transfer,
    ContractCall,
    ContractCreate,
}

impl CallKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CallKind::Transfer => "transfer",
            CallKind::ContractCall => "contractcall",
            CallKind::ContractCreate => "contractcreate",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transfer" => Some(CallKind::Transfer),
            "contractcall" => Some(CallKind::ContractCall),
            "contractcreate" => Some(CallKind::ContractCreate),
            _ => None,
        }
    }
}

/// One caller→callee interaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub timestamp: u64,
    pub block: u64,
    pub from: VertexId,
    pub from_kind: VertexKind,
    pub to: VertexId,
    pub to_kind: VertexKind,
    pub call_kind: CallKind,
    pub tx_id: String,
}

impl TraceRecord {
    /// True when the record starts a user transaction rather than being an
    /// internal call made by a contract.
    pub fn originates_transaction(&self) -> bool {
        self.from_kind == VertexKind::Account
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    /// Infers the format from a file name, looking through a trailing `.gz`.
    pub fn from_path(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?.to_ascii_lowercase();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        if name.ends_with(".csv") {
            Some(TraceFormat::Csv)
        } else if name.ends_with(".jsonl") || name.ends_with(".ndjson") {
            Some(TraceFormat::Jsonl)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorPolicy {
    /// Abort on the first bad row.
    #[default]
    Strict,
    /// Skip bad rows and count them.
    Lenient,
}

/// Records yielded by [`parse_trace`] plus bookkeeping for skipped rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedTrace {
    pub records: Vec<TraceRecord>,
    pub skipped: usize,
    pub total_rows: usize,
}

#[derive(Deserialize)]
struct RawRecord {
    timestamp: u64,
    block: u64,
    from: String,
    from_kind: String,
    to: String,
    to_kind: String,
    call_kind: String,
    tx_id: String,
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    timestamp: u64,
    block: u64,
    from: String,
    from_kind: &'static str,
    to: String,
    to_kind: &'static str,
    call_kind: &'static str,
    tx_id: &'a str,
}

fn field_error(line: u64, reason: impl Into<String>) -> TraceError {
    TraceError::MalformedRow {
        line,
        reason: reason.into(),
    }
}

fn convert(raw: RawRecord, line: u64) -> Result<TraceRecord, TraceError> {
    let from = raw
        .from
        .trim()
        .parse()
        .map_err(|e: ParseVertexIdError| field_error(line, e.to_string()))?;
    let to = raw
        .to
        .trim()
        .parse()
        .map_err(|e: ParseVertexIdError| field_error(line, e.to_string()))?;
    let from_kind = VertexKind::parse(raw.from_kind.trim())
        .ok_or_else(|| field_error(line, format!("unknown vertex kind {:?}", raw.from_kind)))?;
    let to_kind = VertexKind::parse(raw.to_kind.trim())
        .ok_or_else(|| field_error(line, format!("unknown vertex kind {:?}", raw.to_kind)))?;
    let call_kind =
        CallKind::parse(raw.call_kind.trim()).ok_or_else(|| TraceError::UnknownCallKind {
            line,
            kind: raw.call_kind.clone(),
        })?;
    if call_kind == CallKind::ContractCreate && to_kind != VertexKind::Contract {
        return Err(field_error(line, "contract creation targets an account"));
    }
    Ok(TraceRecord {
        timestamp: raw.timestamp,
        block: raw.block,
        from,
        from_kind,
        to,
        to_kind,
        call_kind,
        tx_id: raw.tx_id,
    })
}

/// Accumulates rows, enforcing ordering and the error policy.
struct Collector {
    policy: ErrorPolicy,
    out: ParsedTrace,
    last: Option<(u64, u64)>,
}

impl Collector {
    fn new(policy: ErrorPolicy) -> Self {
        Collector {
            policy,
            out: ParsedTrace::default(),
            last: None,
        }
    }

    fn push(&mut self, line: u64, row: Result<TraceRecord, TraceError>) -> Result<(), TraceError> {
        self.out.total_rows += 1;
        let row = row.and_then(|r| match self.last {
            Some((block, _)) if r.block < block => Err(TraceError::OutOfOrderBlock { line }),
            Some((_, ts)) if r.timestamp < ts => Err(field_error(line, "timestamp decreases")),
            _ => Ok(r),
        });
        match row {
            Ok(r) => {
                self.last = Some((r.block, r.timestamp));
                self.out.records.push(r);
                Ok(())
            }
            Err(e @ TraceError::Io(_)) => Err(e),
            Err(e) if self.policy == ErrorPolicy::Strict => Err(e),
            Err(e) => {
                log::warn!("skipping row: {e}");
                self.out.skipped += 1;
                Ok(())
            }
        }
    }
}

/// Parses a whole trace from `input`.
pub fn parse_trace<R: Read>(
    input: R,
    format: TraceFormat,
    policy: ErrorPolicy,
) -> Result<ParsedTrace, TraceError> {
    match format {
        TraceFormat::Csv => parse_csv(input, policy),
        TraceFormat::Jsonl => parse_jsonl(input, policy),
    }
}

fn parse_csv<R: Read>(input: R, policy: ErrorPolicy) -> Result<ParsedTrace, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut collector = Collector::new(policy);

    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(csv_error(e, 1)),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(collector.out);
    }
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(field_error(
            1,
            format!("expected header {}", CSV_HEADER.join(",")),
        ));
    }

    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line() + 1;
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(line, |p| p.line());
                let row = if record.len() != CSV_HEADER.len() {
                    Err(field_error(
                        line,
                        format!("expected {} fields, found {}", CSV_HEADER.len(), record.len()),
                    ))
                } else {
                    record
                        .deserialize::<RawRecord>(Some(&headers))
                        .map_err(|e| field_error(line, e.to_string()))
                        .and_then(|raw| convert(raw, line))
                };
                collector.push(line, row)?;
            }
            Err(e) => {
                let err = csv_error(e, line);
                collector.push(line, Err(err))?;
            }
        }
    }
    Ok(collector.out)
}

fn csv_error(e: csv::Error, line: u64) -> TraceError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TraceError::Io(io),
        other => field_error(line, format!("{other:?}")),
    }
}

fn parse_jsonl<R: Read>(input: R, policy: ErrorPolicy) -> Result<ParsedTrace, TraceError> {
    let mut collector = Collector::new(policy);
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str::<RawRecord>(&text)
            .map_err(|e| field_error(line_no, e.to_string()))
            .and_then(|raw| convert(raw, line_no));
        collector.push(line_no, row)?;
    }
    Ok(collector.out)
}

/// Opens a trace file, transparently decompressing `.gz` files. The format is
/// inferred from the extension unless given.
pub fn read_trace_file(
    path: &Path,
    format: Option<TraceFormat>,
    policy: ErrorPolicy,
) -> Result<ParsedTrace, TraceError> {
    let format = match format {
        Some(f) => f,
        None => TraceFormat::from_path(path)
            .ok_or_else(|| TraceError::UnknownFormat(path.display().to_string()))?,
    };
    let file = File::open(path)?;
    let gz = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("gz"));
    if gz {
        parse_trace(flate2::read::GzDecoder::new(file), format, policy)
    } else {
        parse_trace(file, format, policy)
    }
}

/// Writes records in canonical CSV form, header included.
pub fn write_trace_csv<W: Write>(out: W, records: &[TraceRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.timestamp.to_string().as_str(),
            r.block.to_string().as_str(),
            r.from.to_string().as_str(),
            r.from_kind.as_str(),
            r.to.to_string().as_str(),
            r.to_kind.as_str(),
            r.call_kind.as_str(),
            r.tx_id.as_str(),
        ])?;
    }
    w.flush()
}

/// Writes records as JSON lines.
pub fn write_trace_jsonl<W: Write>(mut out: W, records: &[TraceRecord]) -> io::Result<()> {
    for r in records {
        let json = JsonRecord {
            timestamp: r.timestamp,
            block: r.block,
            from: r.from.to_string(),
            from_kind: r.from_kind.as_str(),
            to: r.to.to_string(),
            to_kind: r.to_kind.as_str(),
            call_kind: r.call_kind.as_str(),
            tx_id: &r.tx_id,
        };
        serde_json::to_writer(&mut out, &json)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KindWarning {
    UseBeforeCreate(VertexId),
    /// A contract never reached by any edge. Only meaningful on full traces.
    ContractWithoutIncoming(VertexId),
}

/// Checks that vertex kinds are stable and that contracts are created before
/// they are otherwise used.
///
/// A kind conflict is always an error. Use-before-create is an error under
/// [`ErrorPolicy::Strict`] and a warning under [`ErrorPolicy::Lenient`],
/// since real chains break the assumption around fork boundaries.
pub fn validate_kinds(
    records: &[TraceRecord],
    policy: ErrorPolicy,
) -> Result<Vec<KindWarning>, TraceError> {
    let mut kinds: HashMap<VertexId, VertexKind> = HashMap::new();
    let mut created: HashSet<VertexId> = HashSet::new();
    let mut used: HashSet<VertexId> = HashSet::new();
    let mut incoming: HashSet<VertexId> = HashSet::new();
    let mut contracts: Vec<VertexId> = Vec::new();
    let mut warnings = Vec::new();

    for r in records {
        for (v, kind) in [(r.from, r.from_kind), (r.to, r.to_kind)] {
            match kinds.get(&v) {
                Some(&k) if k != kind => return Err(TraceError::KindConflict(v)),
                Some(_) => {}
                None => {
                    kinds.insert(v, kind);
                    if kind == VertexKind::Contract {
                        contracts.push(v);
                    }
                }
            }
        }
        if r.call_kind == CallKind::ContractCreate {
            if used.contains(&r.to) && !created.contains(&r.to) {
                if policy == ErrorPolicy::Strict {
                    return Err(TraceError::UseBeforeCreate(r.to));
                }
                warnings.push(KindWarning::UseBeforeCreate(r.to));
            }
            created.insert(r.to);
        }
        used.insert(r.from);
        used.insert(r.to);
        incoming.insert(r.to);
    }

    warnings.extend(
        contracts
            .into_iter()
            .filter(|c| !incoming.contains(c))
            .map(KindWarning::ContractWithoutIncoming),
    );
    Ok(warnings)
}
