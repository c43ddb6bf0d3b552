use crate::table::{ColumnKind, Table};
use crate::text::{normalize, parse_number, Decimal};

/// A table with headers and cells normalized once and numeric cells parsed
/// once, for running many queries against the same table.
#[derive(Debug, Clone)]
pub struct TableView<'a> {
    pub table: &'a Table,
    headers: Vec<String>,
    cells: Vec<Vec<String>>,
    numbers: Vec<Vec<Option<Decimal>>>,
}

impl<'a> TableView<'a> {
    pub fn new(table: &'a Table) -> Self {
        let m = table.num_columns();
        let numeric: Vec<bool> = (0..m)
            .map(|c| table.kind(c) == ColumnKind::Numeric)
            .collect();
        TableView {
            table,
            headers: table.headers.iter().map(|h| normalize(h)).collect(),
            cells: table
                .rows
                .iter()
                .map(|r| r.iter().map(|c| normalize(c)).collect())
                .collect(),
            numbers: table
                .rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .map(|(c, cell)| if numeric[c] { parse_number(cell) } else { None })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.cells.len()
    }

    pub fn num_columns(&self) -> usize {
        self.headers.len()
    }

    pub fn header(&self, col: usize) -> &str {
        &self.headers[col]
    }

    /// Index of the first column whose normalized header equals `name`.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn kind(&self, col: usize) -> ColumnKind {
        self.table.kind(col)
    }

    /// Normalized cell text.
    pub fn cell(&self, row: usize, col: usize) -> &str {
        &self.cells[row][col]
    }

    /// Parsed value of a cell in a numeric column.
    pub fn number(&self, row: usize, col: usize) -> Option<&Decimal> {
        self.numbers[row][col].as_ref()
    }
}
