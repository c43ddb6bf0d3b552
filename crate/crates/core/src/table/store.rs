//! The normalized table store: one [`Table`] per line of `tables.jsonl`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{classify_columns, Table, TableError};

pub const STORE_FILE: &str = "tables.jsonl";

/// A store location: a `.jsonl` file as given, anything else is a directory
/// holding `tables.jsonl`.
pub fn store_path(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "jsonl") {
        path.to_path_buf()
    } else {
        path.join(STORE_FILE)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> TableError + '_ {
    move |source| TableError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `tables` in order, replacing the store atomically. Returns the
/// file written.
pub fn write_store<'a>(
    path: &Path,
    tables: impl IntoIterator<Item = &'a Table>,
) -> Result<PathBuf, TableError> {
    let file = store_path(path);
    let dir = file
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    let mut w = BufWriter::new(tmp);
    for t in tables {
        serde_json::to_writer(&mut w, t).map_err(|e| io_err(&file)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(&file))?;
    }
    let tmp = w.into_inner().map_err(|e| io_err(&file)(e.into_error()))?;
    tmp.persist(&file).map_err(|e| io_err(&file)(e.error))?;
    Ok(file)
}

/// Reads every table of a store. Column kinds missing from a record are
/// recomputed.
pub fn read_store(path: &Path) -> Result<Vec<Table>, TableError> {
    let file = store_path(path);
    let f = File::open(&file).map_err(io_err(&file))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(&file))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut t: Table = serde_json::from_str(&line).map_err(|e| TableError::Store {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !t.is_rectangular() {
            return Err(TableError::Store {
                line: i + 1,
                message: format!("table {} is not rectangular", t.id),
            });
        }
        if t.column_kinds.len() != t.num_columns() {
            classify_columns(&mut t);
        }
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let tables = vec![
            Table::new(
                "a",
                vec!["x".into(), "n".into()],
                vec![vec!["p".into(), "1".into()]],
            )
            .with_title("t"),
            Table::new("b", vec!["n".into()], vec![]),
        ];
        let file = write_store(dir.path(), &tables).unwrap();
        assert_eq!(file, dir.path().join(STORE_FILE));
        assert_eq!(read_store(dir.path()).unwrap(), tables);
        assert_eq!(read_store(&file).unwrap(), tables);
    }

    #[test]
    fn ragged_record_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("s.jsonl");
        std::fs::write(
            &file,
            "{\"tableId\":\"a\",\"headers\":[\"x\"],\"rows\":[[\"1\",\"2\"]]}\n",
        )
        .unwrap();
        assert!(matches!(
            read_store(&file),
            Err(TableError::Store { line: 1, .. })
        ));
    }
}
