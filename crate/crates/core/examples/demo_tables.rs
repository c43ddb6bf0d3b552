//! Writes generated demo tables as WikiTables-style JSON lines, ready for
//! `pasta ingest --format wikitables-json`. With a fourth argument, also
//! writes labelled statements about those tables for `pasta prep` and
//! `pasta split`.
//!
//! cargo run --example demo_tables -- dump.jsonl [count] [seed] [statements.jsonl]

use std::io::{BufWriter, Write};

use pasta::demo::{demo_statements, demo_tables};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .expect("usage: demo_tables OUT.jsonl [count] [seed]");
    let count: usize = args
        .next()
        .map(|a| a.parse().expect("count"))
        .unwrap_or(1000);
    let seed: u64 = args.next().map(|a| a.parse().expect("seed")).unwrap_or(7);
    let tables = demo_tables(count, seed);
    let mut w = BufWriter::new(std::fs::File::create(&path)?);
    for t in &tables {
        let record = serde_json::json!({
            "tableId": t.id,
            "title": t.title,
            "headers": t.headers,
            "rows": t.rows,
        });
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    eprintln!("wrote {count} tables to {path}");
    if let Some(path) = args.next() {
        let statements = demo_statements(&tables, seed);
        let mut w = BufWriter::new(std::fs::File::create(&path)?);
        for s in &statements {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        eprintln!("wrote {} statements to {path}", statements.len());
    }
    Ok(())
}
