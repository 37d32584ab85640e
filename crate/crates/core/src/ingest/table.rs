use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::Format;

/// One input row, values aligned with the requested column list.
/// Empty strings and JSON nulls are both `None`.
#[derive(Debug, Clone)]
pub(crate) struct RawRow {
    pub line: u64,
    pub values: Vec<Option<String>>,
}

impl RawRow {
    pub fn get(&self, i: usize) -> Option<&str> {
        self.values[i].as_deref()
    }
}

/// Rows that could not even be split into fields.
#[derive(Debug, Clone)]
pub(crate) struct BadRow {
    pub line: u64,
    pub reason: String,
}

pub(crate) struct Table {
    pub rows: Vec<RawRow>,
    pub bad: Vec<BadRow>,
}

/// Reads `path`, requiring every column in `required`; columns in `optional`
/// may be missing from the header entirely.
pub(crate) fn read_table(
    path: &Path,
    format: Format,
    required: &[&str],
    optional: &[&str],
) -> Result<Table> {
    match format {
        Format::Csv => read_csv(path, required, optional),
        Format::Jsonl => read_jsonl(path, required, optional),
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_csv(path: &Path, required: &[&str], optional: &[&str]) -> Result<Table> {
    let file = File::open(path).map_err(|e| malformed(path, e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| malformed(path, format!("unreadable header: {e}")))?
        .clone();
    let header: Vec<&str> = headers.iter().map(str::trim).collect();

    let mut positions = Vec::with_capacity(required.len() + optional.len());
    for col in required {
        let pos = header
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| malformed(path, format!("header is missing column {col:?}")))?;
        positions.push(Some(pos));
    }
    for col in optional {
        positions.push(header.iter().position(|h| h == col));
    }

    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(malformed(path, e.to_string()));
                }
                bad.push(BadRow {
                    line,
                    reason: format!("unparseable row: {e}"),
                });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != header.len() {
            bad.push(BadRow {
                line,
                reason: format!("expected {} fields, found {}", header.len(), record.len()),
            });
            continue;
        }
        let values = positions
            .iter()
            .map(|pos| {
                pos.and_then(|p| record.get(p))
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
            })
            .collect();
        rows.push(RawRow { line, values });
    }
    Ok(Table { rows, bad })
}

fn read_jsonl(path: &Path, required: &[&str], optional: &[&str]) -> Result<Table> {
    let file = File::open(path).map_err(|e| malformed(path, e.to_string()))?;
    let reader = BufReader::new(file);
    let columns: Vec<&str> = required.iter().chain(optional).copied().collect();

    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| malformed(path, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj = match serde_json::from_str::<serde_json::Value>(&line) {
            Ok(serde_json::Value::Object(obj)) => obj,
            Ok(_) => {
                bad.push(BadRow {
                    line: line_no,
                    reason: "row is not a JSON object".into(),
                });
                continue;
            }
            Err(e) => {
                bad.push(BadRow {
                    line: line_no,
                    reason: format!("invalid JSON: {e}"),
                });
                continue;
            }
        };
        let values = columns
            .iter()
            .map(|col| match obj.get(*col) {
                None | Some(serde_json::Value::Null) => None,
                Some(serde_json::Value::String(s)) => {
                    Some(s.trim().to_string()).filter(|s| !s.is_empty())
                }
                Some(other) => Some(other.to_string()),
            })
            .collect();
        rows.push(RawRow {
            line: line_no,
            values,
        });
    }
    Ok(Table { rows, bad })
}
