//! Builds masked cloze examples for one table and prints them as JSON lines.
//!
//! cargo run --example cloze_example -- [seed]

use pasta::cloze::{linearize, mask_answer};
use pasta::demo::demo_tables;
use pasta::template::{default_templates, generate_for_table, GenerationConfig};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .map_or(1, |a| a.parse().expect("seed"));
    let table = demo_tables(1, seed).remove(0);
    let linearized = linearize(&table);
    println!("{linearized}\n");
    let insts = generate_for_table(
        &table,
        &default_templates(),
        &GenerationConfig::default(),
        seed,
    );
    for (i, inst) in insts.iter().take(8).enumerate() {
        let mut ex = mask_answer(inst, &table.id, i).expect("valid span");
        ex.linearized_table = String::from("...");
        println!("{}", serde_json::to_string(&ex).unwrap());
    }
    println!("\n{} examples in total", insts.len());
}
