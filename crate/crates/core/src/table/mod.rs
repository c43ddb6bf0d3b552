//! Rectangular table model, column-kind classification, pre-training
//! eligibility and seeded sampling.

mod ingest;
mod store;

pub use ingest::{
    ingest_tables, read_csv_table, IngestReport, InputFormat, TableStream, WikiTableRecord,
};
pub use store::{read_store, store_path, write_store, STORE_FILE};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::text::{normalize, parse_number};

/// Default pre-training cell cap.
pub const MAX_PRETRAIN_CELLS: usize = 500;

/// Share of non-empty cells that must parse for a column to count as numeric.
pub const NUMERIC_SHARE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Text,
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot sample {k} tables from a population of {population}")]
    SampleTooLarge { k: usize, population: usize },
    #[error("malformed table store record at line {line}: {message}")]
    Store { line: usize, message: String },
}

/// A table with `m` headers and `n` rows of exactly `m` cells each.
///
/// Cells keep their source text; matching and rendering go through
/// [`Table::cell`], which returns the normalized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    #[serde(rename = "tableId")]
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    #[serde(rename = "columnKinds", default)]
    pub column_kinds: Vec<ColumnKind>,
}

impl Table {
    /// Builds a table and classifies its columns. Rectangularity is the
    /// caller's responsibility; ingestion checks it before calling this.
    pub fn new(id: impl Into<String>, headers: Vec<String>, rows: Vec<Vec<String>>) -> Self {
        let mut t = Table {
            id: id.into(),
            title: None,
            headers,
            rows,
            column_kinds: Vec::new(),
        };
        classify_columns(&mut t);
        t
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn num_columns(&self) -> usize {
        self.headers.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cell_count(&self) -> usize {
        self.num_columns() * self.num_rows()
    }

    pub fn is_rectangular(&self) -> bool {
        let m = self.headers.len();
        self.rows.iter().all(|r| r.len() == m)
    }

    /// Normalized text of a cell.
    pub fn cell(&self, row: usize, col: usize) -> String {
        normalize(&self.rows[row][col])
    }

    pub fn header(&self, col: usize) -> String {
        normalize(&self.headers[col])
    }

    pub fn kind(&self, col: usize) -> ColumnKind {
        self.column_kinds
            .get(col)
            .copied()
            .unwrap_or(ColumnKind::Text)
    }

    /// Index of the first column whose normalized header equals `name`
    /// (which must already be normalized).
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| normalize(h) == name)
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[col].as_str())
    }
}

/// Classifies one column from its raw cells.
pub fn column_kind<'a>(cells: impl IntoIterator<Item = &'a str>) -> ColumnKind {
    let (mut non_empty, mut parsed) = (0usize, 0usize);
    for c in cells {
        if c.trim().is_empty() {
            continue;
        }
        non_empty += 1;
        if parse_number(c).is_some() {
            parsed += 1;
        }
    }
    if non_empty > 0 && parsed as f64 >= NUMERIC_SHARE * non_empty as f64 {
        ColumnKind::Numeric
    } else {
        ColumnKind::Text
    }
}

/// Populates `column_kinds`. Deterministic and idempotent.
pub fn classify_columns(table: &mut Table) {
    table.column_kinds = (0..table.num_columns())
        .map(|c| column_kind(table.column(c)))
        .collect();
}

/// Default eligibility with the 500-cell cap.
pub fn filter_pretrain_eligible(table: &Table) -> bool {
    eligibility(table, MAX_PRETRAIN_CELLS).is_ok()
}

/// Why a table cannot be used for corpus synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ineligible {
    NoHeader,
    NoNumericColumn,
    TooManyCells,
}

impl Ineligible {
    pub fn reason(self) -> &'static str {
        match self {
            Ineligible::NoHeader => "no-header",
            Ineligible::NoNumericColumn => "no-numeric-column",
            Ineligible::TooManyCells => "too-many-cells",
        }
    }
}

/// Checks headers, numeric columns and the cell cap, in that order.
pub fn eligibility(table: &Table, max_cells: usize) -> Result<(), Ineligible> {
    if table.headers.is_empty() || table.headers.iter().all(|h| h.trim().is_empty()) {
        return Err(Ineligible::NoHeader);
    }
    if !table.column_kinds.contains(&ColumnKind::Numeric) {
        return Err(Ineligible::NoNumericColumn);
    }
    if table.cell_count() > max_cells {
        return Err(Ineligible::TooManyCells);
    }
    Ok(())
}

/// Uniform sample of `k` tables without replacement. The population is put
/// in id order first, so the result depends only on the set of tables, `k`
/// and `seed`. Output is sorted by id.
pub fn sample_tables(
    mut tables: Vec<Table>,
    k: usize,
    seed: u64,
) -> Result<Vec<Table>, TableError> {
    if k > tables.len() {
        return Err(TableError::SampleTooLarge {
            k,
            population: tables.len(),
        });
    }
    tables.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, tables.len(), k).into_vec();
    picked.sort_unstable();
    let mut slots: Vec<Option<Table>> = tables.into_iter().map(Some).collect();
    Ok(picked.into_iter().filter_map(|i| slots[i].take()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(id: &str, headers: &[&str], rows: &[&[&str]]) -> Table {
        Table::new(
            id,
            headers.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    fn grid(id: &str, m: usize, n: usize) -> Table {
        let headers = (0..m).map(|c| format!("col {c}")).collect();
        let rows = (0..n)
            .map(|r| {
                (0..m)
                    .map(|c| {
                        if c == 0 {
                            format!("{r}")
                        } else {
                            format!("x{r}")
                        }
                    })
                    .collect()
            })
            .collect();
        Table::new(id, headers, rows)
    }

    #[test]
    fn classifies_examples() {
        assert_eq!(column_kind(["3.61", "2.14"]), ColumnKind::Numeric);
        assert_eq!(column_kind(["night moves", "broken"]), ColumnKind::Text);
        assert_eq!(column_kind(["1,234", "56"]), ColumnKind::Numeric);
        assert_eq!(column_kind(["", " "]), ColumnKind::Text);
        assert_eq!(column_kind(Vec::<&str>::new()), ColumnKind::Text);
    }

    #[test]
    fn ninety_percent_threshold() {
        let mut cells: Vec<String> = (0..9).map(|i| i.to_string()).collect();
        cells.push("n/a".into());
        assert_eq!(
            column_kind(cells.iter().map(String::as_str)),
            ColumnKind::Numeric
        );
        cells.push("tbd".into());
        assert_eq!(
            column_kind(cells.iter().map(String::as_str)),
            ColumnKind::Text
        );
        // empty cells do not count against the share
        let sparse = ["1", "", "", "2"];
        assert_eq!(column_kind(sparse), ColumnKind::Numeric);
    }

    #[test]
    fn classification_is_idempotent() {
        let mut table = t("a", &["team", "score"], &[&["a", "1"], &["b", "2"]]);
        let before = table.clone();
        classify_columns(&mut table);
        assert_eq!(table, before);
    }

    #[test]
    fn eligibility_examples() {
        assert!(filter_pretrain_eligible(&grid("ok", 5, 10)));
        let big = grid("big", 10, 51);
        assert_eq!(big.cell_count(), 510);
        assert_eq!(eligibility(&big, 500), Err(Ineligible::TooManyCells));
        assert!(filter_pretrain_eligible(&grid("edge", 10, 50)));
        let texty = t("txt", &["a", "b"], &[&["x", "y"]]);
        assert_eq!(eligibility(&texty, 500), Err(Ineligible::NoNumericColumn));
        let mut headless = grid("h", 2, 2);
        headless.headers = vec![" ".into(), "".into()];
        assert_eq!(eligibility(&headless, 500), Err(Ineligible::NoHeader));
    }

    #[test]
    fn eligibility_ignores_unrelated_fields() {
        let base = grid("orig", 3, 4);
        let mut mutated = base.clone();
        mutated.id = "other".into();
        mutated.title = Some("A Title".into());
        mutated.rows[1][2] = "completely different".into();
        mutated.headers[1] = "Renamed".into();
        assert_eq!(
            filter_pretrain_eligible(&base),
            filter_pretrain_eligible(&mutated)
        );
    }

    #[test]
    fn sampling_contract() {
        let pop: Vec<Table> = (0..50).map(|i| grid(&format!("t{i:02}"), 2, 2)).collect();
        let a = sample_tables(pop.clone(), 10, 7).unwrap();
        let b = sample_tables(pop.iter().rev().cloned().collect(), 10, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.windows(2).all(|w| w[0].id < w[1].id));
        let all = sample_tables(pop.clone(), 50, 1).unwrap();
        assert_eq!(
            all.iter().map(|t| &t.id).collect::<Vec<_>>(),
            pop.iter().map(|t| &t.id).collect::<Vec<_>>()
        );
        assert!(matches!(
            sample_tables(pop, 51, 1),
            Err(TableError::SampleTooLarge {
                k: 51,
                population: 50
            })
        ));
    }
}
