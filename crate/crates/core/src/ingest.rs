//! Dataset parsing and curation.
//!
//! Input is JSON Lines (`{"id","name","players","unlocks":[...]}`) or CSV
//! with columns `id,name,players,unlocks` where `unlocks` is a `|`-separated
//! list. Malformed rows are reported as rejections and never abort the read.
//!
//! Curation drops records with no players, no achievements, negative counts,
//! counts above the player total, or only zero counts. When an id repeats, the
//! last occurrence wins.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{canonical_order, GameRecord};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("write failed")]
    Write(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[serde(rename = "jsonl")]
    JsonLines,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" | "ndjson" => Ok(Format::JsonLines),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RejectReason {
    ParseError(String),
    NoPlayers,
    EmptyUnlocks,
    NegativeCount,
    CountExceedsPlayers,
    AllZero,
    Duplicate,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::ParseError(msg) => write!(f, "ParseError: {msg}"),
            RejectReason::NoPlayers => f.write_str("NoPlayers"),
            RejectReason::EmptyUnlocks => f.write_str("EmptyUnlocks"),
            RejectReason::NegativeCount => f.write_str("NegativeCount"),
            RejectReason::CountExceedsPlayers => f.write_str("CountExceedsPlayers"),
            RejectReason::AllZero => f.write_str("AllZero"),
            RejectReason::Duplicate => f.write_str("Duplicate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    /// 1-based data row (line number for JSON Lines, record number for CSV).
    pub row: usize,
    pub id: Option<String>,
    pub reason: RejectReason,
}

/// A parsed row before validation. Counts are signed so that negative input
/// can be reported instead of failing to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub row: usize,
    pub id: String,
    pub name: String,
    pub players: i64,
    pub unlocks: Vec<i64>,
}

impl From<&GameRecord> for Candidate {
    fn from(r: &GameRecord) -> Self {
        Self {
            row: 0,
            id: r.id.clone(),
            name: r.name.clone(),
            players: i64::try_from(r.players).unwrap_or(i64::MAX),
            unlocks: r.unlocks.iter().map(|&c| i64::try_from(c).unwrap_or(i64::MAX)).collect(),
        }
    }
}

pub type ParsedRow = Result<Candidate, Rejection>;

#[derive(Deserialize)]
struct JsonRow {
    id: String,
    name: String,
    players: i64,
    unlocks: Vec<i64>,
}

fn parse_error(row: usize, msg: impl Into<String>) -> Rejection {
    Rejection {
        row,
        id: None,
        reason: RejectReason::ParseError(msg.into()),
    }
}

/// Parses JSON Lines from a reader. Blank lines are skipped.
pub fn parse_jsonl<R: BufRead>(mut reader: R) -> io::Result<Vec<ParsedRow>> {
    let mut out = Vec::new();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let text = match std::str::from_utf8(&buf) {
            Ok(t) => t.trim(),
            Err(e) => {
                out.push(Err(parse_error(line_no, format!("invalid UTF-8: {e}"))));
                continue;
            }
        };
        if text.is_empty() {
            continue;
        }
        out.push(match serde_json::from_str::<JsonRow>(text) {
            Ok(r) => Ok(Candidate {
                row: line_no,
                id: r.id,
                name: r.name,
                players: r.players,
                unlocks: r.unlocks,
            }),
            Err(e) => Err(parse_error(line_no, e.to_string())),
        });
    }
    Ok(out)
}

/// Parses CSV with a header row `id,name,players,unlocks`.
pub fn parse_csv<R: Read>(reader: R) -> io::Result<Vec<ParsedRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut record = csv::ByteRecord::new();
    let mut row = 0;
    loop {
        match rdr.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                row += 1;
                out.push(csv_candidate(row, &record));
            }
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(io::Error::other(e.to_string()));
                }
                row += 1;
                out.push(Err(parse_error(row, e.to_string())));
            }
        }
    }
    Ok(out)
}

fn csv_candidate(row: usize, record: &csv::ByteRecord) -> ParsedRow {
    if record.len() != 4 {
        return Err(parse_error(row, format!("expected 4 fields, found {}", record.len())));
    }
    let field = |i: usize| {
        std::str::from_utf8(&record[i])
            .map(str::trim)
            .map_err(|e| parse_error(row, format!("invalid UTF-8 in field {i}: {e}")))
    };
    let id = field(0)?.to_string();
    let name = field(1)?.to_string();
    let players = field(2)?
        .parse::<i64>()
        .map_err(|e| parse_error(row, format!("players: {e}")))?;
    let raw = field(3)?;
    let unlocks = if raw.is_empty() {
        Vec::new()
    } else {
        raw.split('|')
            .map(|s| s.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| parse_error(row, format!("unlocks: {e}")))?
    };
    Ok(Candidate {
        row,
        id,
        name,
        players,
        unlocks,
    })
}

/// Opens and parses a dataset file.
pub fn parse(path: &Path, format: Format) -> Result<Vec<ParsedRow>, IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let reader = BufReader::new(file);
    match format {
        Format::JsonLines => parse_jsonl(reader),
        Format::Csv => parse_csv(reader),
    }
    .map_err(io_err)
}

fn check(c: &Candidate) -> Result<GameRecord, RejectReason> {
    if c.players < 1 {
        return Err(RejectReason::NoPlayers);
    }
    if c.unlocks.is_empty() {
        return Err(RejectReason::EmptyUnlocks);
    }
    if c.unlocks.iter().any(|&v| v < 0) {
        return Err(RejectReason::NegativeCount);
    }
    if c.unlocks.iter().any(|&v| v > c.players) {
        return Err(RejectReason::CountExceedsPlayers);
    }
    if c.unlocks.iter().all(|&v| v == 0) {
        return Err(RejectReason::AllZero);
    }
    let record = GameRecord::new(
        c.id.clone(),
        c.name.clone(),
        c.players as u64,
        c.unlocks.iter().map(|&v| v as u64).collect(),
    );
    Ok(canonical_order(record))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curated {
    pub accepted: Vec<GameRecord>,
    /// Rejections in input order.
    pub rejected: Vec<Rejection>,
}

/// Validates parsed rows. Parse failures pass through as rejections;
/// accepted records are canonically ordered and keep input order.
pub fn curate(rows: impl IntoIterator<Item = ParsedRow>) -> Curated {
    let rows: Vec<ParsedRow> = rows.into_iter().collect();
    let mut last_seen: HashMap<&str, usize> = HashMap::new();
    for (i, row) in rows.iter().enumerate() {
        if let Ok(c) = row {
            last_seen.insert(c.id.as_str(), i);
        }
    }
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        match row {
            Err(rej) => rejected.push(rej.clone()),
            Ok(c) => {
                let reject = |reason| Rejection {
                    row: c.row,
                    id: Some(c.id.clone()),
                    reason,
                };
                if last_seen.get(c.id.as_str()) != Some(&i) {
                    rejected.push(reject(RejectReason::Duplicate));
                    continue;
                }
                match check(c) {
                    Ok(record) => accepted.push(record),
                    Err(reason) => rejected.push(reject(reason)),
                }
            }
        }
    }
    Curated { accepted, rejected }
}

/// Curation bookkeeping for one input file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawDataset {
    pub source_path: PathBuf,
    pub format: Format,
    pub rows: usize,
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
}

/// Parses and curates a file in one step.
pub fn load(path: &Path, format: Format) -> Result<(Vec<GameRecord>, RawDataset), IngestError> {
    let rows = parse(path, format)?;
    let total = rows.len();
    let curated = curate(rows);
    let report = RawDataset {
        source_path: path.to_path_buf(),
        format,
        rows: total,
        accepted: curated.accepted.len(),
        rejected: curated.rejected,
    };
    Ok((curated.accepted, report))
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    id: &'a str,
    name: &'a str,
    players: u64,
    unlocks: &'a [u64],
}

/// One JSON line per record, fields in the order `id, name, players, unlocks`.
pub fn record_to_json(record: &GameRecord) -> String {
    serde_json::to_string(&JsonRecordOut {
        id: &record.id,
        name: &record.name,
        players: record.players,
        unlocks: &record.unlocks,
    })
    .expect("record serializes")
}

pub fn write_jsonl<W: Write>(records: &[GameRecord], mut out: W) -> io::Result<()> {
    for r in records {
        out.write_all(record_to_json(r).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Rejections as TSV: `row, id, reason`.
pub fn rejections_tsv(rejected: &[Rejection]) -> String {
    let mut out = String::from("row\tid\treason\n");
    for r in rejected {
        let reason = r.reason.to_string().replace(['\t', '\n'], " ");
        out.push_str(&format!("{}\t{}\t{}\n", r.row, r.id.as_deref().unwrap_or(""), reason));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cand(id: &str, players: i64, unlocks: &[i64]) -> ParsedRow {
        Ok(Candidate {
            row: 1,
            id: id.into(),
            name: id.into(),
            players,
            unlocks: unlocks.to_vec(),
        })
    }

    #[test]
    fn jsonl_row() {
        let rows = parse_jsonl(&br#"{"id":"a1","name":"X","players":10,"unlocks":[10,4]}"#[..]).unwrap();
        let c = rows[0].as_ref().unwrap();
        assert_eq!((c.players, c.unlocks.clone()), (10, vec![10, 4]));
    }

    #[test]
    fn jsonl_bad_lines_are_rejections() {
        let input = b"{\"id\":\"a\",\"name\":\"A\",\"players\":3,\"unlocks\":[1]}\nnot json\n\n\xff\xfe\n{\"id\":\"b\",\"name\":\"B\",\"players\":\"x\",\"unlocks\":[]}\n";
        let rows = parse_jsonl(&input[..]).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].is_ok());
        let rows_err: Vec<usize> = rows.iter().filter_map(|r| r.as_ref().err().map(|e| e.row)).collect();
        assert_eq!(rows_err, vec![2, 4, 5]);
        assert!(rows[1..].iter().all(|r| matches!(r, Err(Rejection { reason: RejectReason::ParseError(_), .. }))));
    }

    #[test]
    fn csv_rows() {
        let input = "id,name,players,unlocks\na,Alpha,10,10|4|0\nb,Beta,ten,1|2\nc,\"Gamma, the game\",5,5\nd,Delta,3\n";
        let rows = parse_csv(input.as_bytes()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].as_ref().unwrap().unlocks, vec![10, 4, 0]);
        assert!(matches!(&rows[1], Err(Rejection { reason: RejectReason::ParseError(_), row: 2, .. })));
        assert_eq!(rows[2].as_ref().unwrap().name, "Gamma, the game");
        assert!(rows[3].is_err());
    }

    #[test]
    fn curation_reasons() {
        let c = curate(vec![
            cand("a", 5, &[6, 1]),
            cand("b", 5, &[0, 0]),
            cand("c", 0, &[0]),
            cand("d", 5, &[]),
            cand("e", 5, &[-1, 2]),
            cand("f", 5, &[1, 5, 3]),
        ]);
        let reasons: Vec<RejectReason> = c.rejected.iter().map(|r| r.reason.clone()).collect();
        assert_eq!(
            reasons,
            vec![
                RejectReason::CountExceedsPlayers,
                RejectReason::AllZero,
                RejectReason::NoPlayers,
                RejectReason::EmptyUnlocks,
                RejectReason::NegativeCount,
            ]
        );
        assert_eq!(c.accepted.len(), 1);
        assert_eq!(c.accepted[0].unlocks, vec![5, 3, 1]);
        assert!(c.accepted[0].ordered);
    }

    #[test]
    fn duplicate_last_wins() {
        let mut rows = vec![cand("a", 5, &[1]), cand("b", 5, &[2]), cand("a", 5, &[3])];
        if let Ok(c) = &mut rows[2] {
            c.row = 3;
        }
        let c = curate(rows);
        assert_eq!(c.accepted.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), vec!["b", "a"]);
        assert_eq!(c.accepted[1].unlocks, vec![3]);
        assert_eq!(c.rejected.len(), 1);
        assert_eq!(c.rejected[0].reason, RejectReason::Duplicate);
    }

    #[test]
    fn json_field_order() {
        let r = GameRecord::new("x", "Name \"q\"", 7, vec![7, 3]);
        assert_eq!(record_to_json(&r), r#"{"id":"x","name":"Name \"q\"","players":7,"unlocks":[7,3]}"#);
    }

    #[test]
    fn missing_file_is_fatal() {
        let err = parse(Path::new("/definitely/not/here.jsonl"), Format::JsonLines).unwrap_err();
        assert!(matches!(err, IngestError::Io { .. }));
    }

    fn arb_row() -> impl Strategy<Value = ParsedRow> {
        ("[a-e]", -2i64..8, prop::collection::vec(-1i64..9, 0..5)).prop_map(|(id, p, u)| cand(&id, p, &u))
    }

    proptest! {
        #[test]
        fn curation_partitions_and_is_idempotent(rows in prop::collection::vec(arb_row(), 0..30)) {
            let n = rows.len();
            let c = curate(rows.clone());
            prop_assert_eq!(c.accepted.len() + c.rejected.len(), n);
            prop_assert_eq!(curate(rows), c.clone());
            let again = curate(c.accepted.iter().map(|r| Ok(Candidate::from(r))));
            prop_assert!(again.rejected.is_empty());
            prop_assert_eq!(again.accepted, c.accepted);
        }
    }
}
