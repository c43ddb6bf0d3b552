//! Synthesizes a cloze corpus from generated demo tables and prints the
//! per-type statistics table.
//!
//! cargo run --release --example corpus_stats_demo -- [tables] [seed] [corpus.jsonl]

use std::time::Instant;

use pasta::demo::demo_tables;
use pasta::pipeline::{synthesize_to_files, SynthOptions, SynthPaths};
use pasta::polish::{default_candidate_sets, Scorer};
use pasta::template::default_templates;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args
        .next()
        .map(|a| a.parse().expect("table count"))
        .unwrap_or(1000);
    let seed: u64 = args.next().map(|a| a.parse().expect("seed")).unwrap_or(7);
    let dir = tempfile::tempdir().unwrap();
    let out = args
        .next()
        .map(Into::into)
        .unwrap_or_else(|| dir.path().join("corpus.jsonl"));
    let paths = SynthPaths::beside(&out);
    let started = Instant::now();
    let (report, stats) = synthesize_to_files(
        demo_tables(n, seed),
        &default_templates(),
        &default_candidate_sets(),
        &Scorer::lexicon(),
        &SynthOptions {
            seed,
            ..Default::default()
        },
        &paths,
    )
    .expect("synthesis");
    println!("{stats}");
    println!("\n{report:?}\n{:.1?}", started.elapsed());
}
