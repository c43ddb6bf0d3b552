//! Select-then-rank preprocessing of one statement-table pair, with both
//! ablations for comparison.
//!
//! cargo run --example prep_pair -- [budget]

use pasta::finetune::{prepare_pair, rank_rows, PrepOptions, Statement};
use pasta::table::Table;

fn main() {
    let budget = std::env::args()
        .nth(1)
        .map_or(8, |a| a.parse().expect("budget"));
    let rows = [
        ["wynn", "45", "2005", "las vegas strip", "steve wynn"],
        [
            "las vegas hilton",
            "30",
            "1969",
            "paradise",
            "kirk kerkorian",
        ],
        ["bellagio", "36", "1998", "las vegas strip", "mgm resorts"],
        [
            "palazzo",
            "53",
            "2007",
            "las vegas strip",
            "las vegas sands",
        ],
    ];
    let table = Table::new(
        "hotels",
        ["hotel", "floors", "year", "location", "owner"]
            .map(String::from)
            .to_vec(),
        rows.iter().map(|r| r.map(String::from).to_vec()).collect(),
    );
    let statement = Statement::new(
        "1",
        "the palazzo has more floors than las vegas hilton",
        "hotels",
    );
    let ranked = rank_rows(&statement, &table);
    println!(
        "row order {:?}, scores {:?}\n",
        ranked.row_order, ranked.row_scores
    );
    for (name, options) in [
        (
            "full",
            PrepOptions {
                budget,
                ..Default::default()
            },
        ),
        (
            "no column selection",
            PrepOptions {
                budget,
                select_columns: false,
                ..Default::default()
            },
        ),
        (
            "no row ranking",
            PrepOptions {
                budget,
                rank_rows: false,
                ..Default::default()
            },
        ),
    ] {
        match prepare_pair(&statement, &table, options) {
            Ok(r) => println!("{name}:\n  {}", r.linearized_table),
            Err(e) => println!("{name}: {e}"),
        }
    }
}
