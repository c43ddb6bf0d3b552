//! Fills one template of each operation type against a demo table and shows
//! the bound SQL, the answer and the rendered sentence.
//!
//! cargo run --example instantiate_templates -- [seed]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pasta::demo::demo_table;
use pasta::template::{default_templates, instantiate, OpType};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .map_or(3, |a| a.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = demo_table(&mut rng, "demo", 12);
    println!("{} | {}", table.id, table.headers.join(" | "));
    for row in &table.rows {
        println!("  {}", row.join(" | "));
    }
    let templates = default_templates();
    for op in OpType::ALL {
        let hit = templates
            .iter()
            .filter(|t| t.op_type == op)
            .find_map(|t| instantiate(t, &table, &mut rng));
        match hit {
            Some(inst) => {
                println!("\n{op}: {}", inst.sentence);
                println!("  sql    {}", inst.sql);
                println!("  answer {:?}", inst.answer);
                assert!(inst.verify(&table));
            }
            None => println!("\n{op}: no template fits this table"),
        }
    }
}
