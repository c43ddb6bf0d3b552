use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Table, TableError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// One JSON record per line: `{"tableId","title","headers","rows"}`.
    WikitablesJson,
    /// One CSV file per table, first row is the header, id is the file stem.
    CsvDir,
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wikitables-json" => Ok(InputFormat::WikitablesJson),
            "csv-dir" => Ok(InputFormat::CsvDir),
            other => Err(format!(
                "unknown input format {other:?} (expected wikitables-json or csv-dir)"
            )),
        }
    }
}

/// Counts of what ingestion saw, accepted and rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub total_seen: usize,
    pub accepted: usize,
    pub rejected_by_reason: BTreeMap<String, usize>,
}

impl IngestReport {
    pub fn accept(&mut self) {
        self.total_seen += 1;
        self.accepted += 1;
    }

    pub fn reject(&mut self, reason: &str) {
        self.total_seen += 1;
        *self
            .rejected_by_reason
            .entry(reason.to_string())
            .or_default() += 1;
    }

    /// Moves an accepted table into a rejection bucket (used by later filters).
    pub fn demote(&mut self, reason: &str) {
        self.accepted -= 1;
        *self
            .rejected_by_reason
            .entry(reason.to_string())
            .or_default() += 1;
    }

    pub fn rejected(&self) -> usize {
        self.rejected_by_reason.values().sum()
    }
}

/// Raw WikiTables record. Cells may be JSON strings, numbers, booleans or
/// null; anything else makes the record malformed.
#[derive(Debug, Clone, Deserialize)]
pub struct WikiTableRecord {
    #[serde(rename = "tableId")]
    pub table_id: Value,
    #[serde(default)]
    pub title: Option<String>,
    pub headers: Vec<Value>,
    pub rows: Vec<Vec<Value>>,
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Null => Some(String::new()),
        _ => None,
    }
}

/// Validates a raw grid and builds a classified table, or names the
/// rejection reason.
fn build_table(
    id: String,
    title: Option<String>,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
) -> Result<Table, &'static str> {
    if id.trim().is_empty() {
        return Err("missing-id");
    }
    if headers.is_empty() {
        return Err("no-header");
    }
    if rows.is_empty() {
        return Err("no-rows");
    }
    if rows.iter().any(|r| r.len() != headers.len()) {
        return Err("ragged-row");
    }
    let mut table = Table::new(id, headers, rows);
    table.title = title.filter(|t| !t.trim().is_empty());
    Ok(table)
}

fn table_from_record(rec: WikiTableRecord) -> Result<Table, &'static str> {
    let id = match &rec.table_id {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err("missing-id"),
    };
    let headers: Option<Vec<String>> = rec.headers.iter().map(scalar_text).collect();
    let rows: Option<Vec<Vec<String>>> = rec
        .rows
        .iter()
        .map(|r| r.iter().map(scalar_text).collect())
        .collect();
    match (headers, rows) {
        (Some(h), Some(r)) => build_table(id, rec.title, h, r),
        _ => Err("malformed-record"),
    }
}

/// Parses one WikiTables JSON line.
pub fn parse_wikitables_line(line: &str) -> Result<Table, &'static str> {
    let rec: WikiTableRecord = serde_json::from_str(line).map_err(|_| "malformed-record")?;
    table_from_record(rec)
}

/// Reads one CSV file as a table whose id is the file stem.
pub fn read_csv_table(
    path: &Path,
    delimiter: u8,
) -> Result<Result<Table, &'static str>, TableError> {
    let io_err = |source: std::io::Error| TableError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_reader(file);
    let mut records = Vec::new();
    for rec in reader.records() {
        match rec {
            Ok(r) => records.push(r.iter().map(str::to_string).collect::<Vec<_>>()),
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    let csv::ErrorKind::Io(inner) = e.into_kind() else {
                        unreachable!()
                    };
                    return Err(io_err(inner));
                }
                return Ok(Err("malformed-record"));
            }
        }
    }
    let mut it = records.into_iter();
    let headers = it.next().unwrap_or_default();
    Ok(build_table(id, None, headers, it.collect()))
}

enum Source {
    Lines {
        path: String,
        reader: Box<dyn BufRead + Send>,
    },
    Files {
        files: std::vec::IntoIter<PathBuf>,
        delimiter: u8,
    },
}

/// Single-pass stream of validated tables. Malformed records are counted
/// in the report and skipped; only I/O failures surface as errors.
pub struct TableStream {
    source: Source,
    report: IngestReport,
    failed: bool,
}

impl TableStream {
    /// WikiTables JSON lines from any reader.
    pub fn wikitables<R: BufRead + Send + 'static>(reader: R) -> Self {
        TableStream {
            source: Source::Lines {
                path: "<reader>".into(),
                reader: Box::new(reader),
            },
            report: IngestReport::default(),
            failed: false,
        }
    }

    /// Every `*.csv` file of a directory, in file-name order.
    pub fn csv_dir(dir: &Path, delimiter: u8) -> Result<Self, TableError> {
        let io_err = |source| TableError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(io_err)? {
            let path = entry.map_err(io_err)?.path();
            if path.is_file()
                && path
                    .extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
            {
                files.push(path);
            }
        }
        files.sort();
        Ok(TableStream {
            source: Source::Files {
                files: files.into_iter(),
                delimiter,
            },
            report: IngestReport::default(),
            failed: false,
        })
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn into_report(self) -> IngestReport {
        self.report
    }
}

impl Iterator for TableStream {
    type Item = Result<Table, TableError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let outcome = match &mut self.source {
                Source::Lines { path, reader } => {
                    let mut line = String::new();
                    match reader.read_line(&mut line) {
                        Ok(0) => return None,
                        Ok(_) if line.trim().is_empty() => continue,
                        Ok(_) => parse_wikitables_line(&line),
                        Err(source) => {
                            self.failed = true;
                            return Some(Err(TableError::Io {
                                path: path.clone(),
                                source,
                            }));
                        }
                    }
                }
                Source::Files { files, delimiter } => {
                    let path = files.next()?;
                    match read_csv_table(&path, *delimiter) {
                        Ok(outcome) => outcome,
                        Err(e) => {
                            self.failed = true;
                            return Some(Err(e));
                        }
                    }
                }
            };
            match outcome {
                Ok(table) => {
                    self.report.accept();
                    return Some(Ok(table));
                }
                Err(reason) => self.report.reject(reason),
            }
        }
    }
}

/// Opens `path` in the given format.
pub fn ingest_tables(path: &Path, format: InputFormat) -> Result<TableStream, TableError> {
    match format {
        InputFormat::WikitablesJson => {
            let file = File::open(path).map_err(|source| TableError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let mut stream = TableStream::wikitables(BufReader::new(file));
            if let Source::Lines { path: p, .. } = &mut stream.source {
                *p = path.display().to_string();
            }
            Ok(stream)
        }
        InputFormat::CsvDir => TableStream::csv_dir(path, b','),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnKind;
    use std::io::Cursor;

    fn stream(text: &str) -> (Vec<Table>, IngestReport) {
        let mut s = TableStream::wikitables(Cursor::new(text.to_string()));
        let tables: Vec<Table> = s.by_ref().map(Result::unwrap).collect();
        (tables, s.into_report())
    }

    #[test]
    fn well_formed_record() {
        let (tables, report) = stream(
            r#"{"tableId":"t1","title":"Scores","headers":["team","score"],"rows":[["juventus","97"],["milan",68]]}"#,
        );
        assert_eq!(tables.len(), 1);
        let t = &tables[0];
        assert_eq!((t.num_columns(), t.num_rows()), (2, 2));
        assert_eq!(t.rows[1][1], "68");
        assert_eq!(t.column_kinds, vec![ColumnKind::Text, ColumnKind::Numeric]);
        assert_eq!(t.title.as_deref(), Some("Scores"));
        assert_eq!(report.accepted, 1);
    }

    #[test]
    fn rejections_are_counted() {
        let input = [
            r#"{"tableId":"a","headers":["x","y"],"rows":[["1","2","3"]]}"#,
            r#"{"tableId":"b","headers":[],"rows":[["1"]]}"#,
            r#"{"tableId":"c","headers":["x"],"rows":[]}"#,
            r#"not json"#,
            r#"{"tableId":"d","headers":["x"],"rows":[[{"nested":1}]]}"#,
            "",
            r#"{"tableId":"e","headers":["x"],"rows":[["1"]]}"#,
        ]
        .join("\n");
        let (tables, report) = stream(&input);
        assert_eq!(tables.len(), 1);
        assert_eq!(report.total_seen, 6);
        assert_eq!(report.accepted + report.rejected(), report.total_seen);
        assert_eq!(report.rejected_by_reason["ragged-row"], 1);
        assert_eq!(report.rejected_by_reason["no-header"], 1);
        assert_eq!(report.rejected_by_reason["no-rows"], 1);
        assert_eq!(report.rejected_by_reason["malformed-record"], 2);
    }

    #[test]
    fn ingestion_is_idempotent() {
        let input = r#"{"tableId":"a","headers":["x","y"],"rows":[["1","q"]]}
{"tableId":"b","headers":["x"],"rows":[["1"],["2"]]}"#;
        assert_eq!(stream(input), stream(input));
    }

    #[test]
    fn csv_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("b_hotels.csv"),
            "hotel,floors\nthe palazzo,53\nlas vegas hilton,30\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("a_ragged.csv"), "x,y\n1,2,3\n").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let mut s = ingest_tables(dir.path(), InputFormat::CsvDir).unwrap();
        let tables: Vec<Table> = s.by_ref().map(Result::unwrap).collect();
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].id, "b_hotels");
        assert_eq!(
            tables[0].column_kinds,
            vec![ColumnKind::Text, ColumnKind::Numeric]
        );
        assert_eq!(s.report().rejected_by_reason["ragged-row"], 1);
    }

    #[test]
    fn unreadable_source_is_fatal() {
        assert!(matches!(
            ingest_tables(
                Path::new("/nonexistent/dump.jsonl"),
                InputFormat::WikitablesJson
            ),
            Err(TableError::Io { .. })
        ));
    }
}
