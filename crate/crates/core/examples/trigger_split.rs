//! Classifies statements by trigger words and draws fixed-size per-type
//! evaluation sets.
//!
//! cargo run --example trigger_split -- [per-type]

use pasta::demo::{demo_statements, demo_tables};
use pasta::finetune::{split_by_trigger, TriggerCatalog};

fn main() {
    let per_type = std::env::args()
        .nth(1)
        .map_or(20, |a| a.parse().expect("per-type"));
    let catalog = TriggerCatalog::default();
    for text in [
        "the average amount of points among all teams is 29",
        "there are 5 different nations in the tournament",
        "the second largest number of runs was 8529",
        "the sky is blue",
    ] {
        println!(
            "{:<12} {text}",
            catalog
                .classify(text)
                .map_or("-".into(), |op| op.to_string())
        );
    }
    let statements = demo_statements(&demo_tables(300, 5), 5);
    match split_by_trigger(&statements, &catalog, per_type, 0) {
        Ok(sets) => {
            for (op, set) in sets {
                println!("\n{op}: {} statements, e.g. {:?}", set.len(), set[0].text);
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    }
}
