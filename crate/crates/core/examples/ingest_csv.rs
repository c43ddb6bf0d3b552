//! Reads a CSV file as a table, classifies its columns and checks
//! pre-training eligibility.
//!
//! cargo run --example ingest_csv -- [file.csv]

use std::path::PathBuf;

use pasta::table::{eligibility, read_csv_table, MAX_PRETRAIN_CELLS};

const SAMPLE: &str = "\
team,played,points,coach
Lions,12,\"1,024\",Ana Ruiz
Bears,12,998,
Wolves,11,n/a,Li Wei
";

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            let p = dir.path().join("standings.csv");
            std::fs::write(&p, SAMPLE).unwrap();
            p
        });
    let table = match read_csv_table(&path, b',') {
        Ok(Ok(t)) => t,
        Ok(Err(why)) => {
            eprintln!("rejected: {why}");
            std::process::exit(1);
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    println!("{}: {} rows", table.id, table.num_rows());
    for (h, k) in table.headers.iter().zip(&table.column_kinds) {
        println!("  {h:<10} {k:?}");
    }
    match eligibility(&table, MAX_PRETRAIN_CELLS) {
        Ok(()) => println!("eligible for synthesis"),
        Err(why) => println!("not eligible: {}", why.reason()),
    }
}
