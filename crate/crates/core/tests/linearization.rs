use std::path::PathBuf;

use pasta::cloze::{linearize, parse_linearized};
use pasta::table::Table;

fn fixtures() -> Vec<(PathBuf, Table, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/linearization");
    let mut out = Vec::new();
    for i in 0..20 {
        let json = dir.join(format!("{i:02}.json"));
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
        let strings = |v: &serde_json::Value| -> Vec<String> {
            v.as_array()
                .unwrap()
                .iter()
                .map(|c| c.as_str().unwrap().to_string())
                .collect()
        };
        let table = Table::new(
            v["tableId"].as_str().unwrap(),
            strings(&v["headers"]),
            v["rows"].as_array().unwrap().iter().map(strings).collect(),
        );
        let expected = std::fs::read_to_string(dir.join(format!("{i:02}.txt"))).unwrap();
        out.push((json, table, expected.trim_end_matches('\n').to_string()));
    }
    out
}

#[test]
fn twenty_golden_tables() {
    let fixtures = fixtures();
    assert_eq!(fixtures.len(), 20);
    for (path, table, expected) in fixtures {
        assert_eq!(linearize(&table), expected, "{}", path.display());
    }
}

#[test]
fn golden_strings_parse_back_to_the_grid() {
    for (path, table, expected) in fixtures() {
        // a pipe inside a cell is ambiguous by construction
        if table
            .headers
            .iter()
            .chain(table.rows.iter().flatten())
            .any(|c| c.contains('|'))
        {
            continue;
        }
        let (headers, rows) =
            parse_linearized(&expected).unwrap_or_else(|| panic!("{}", path.display()));
        assert_eq!(headers.len(), table.num_columns());
        assert_eq!(rows.len(), table.num_rows());
        for (r, row) in rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                assert_eq!(*cell, table.cell(r, c), "{}", path.display());
            }
        }
    }
}
