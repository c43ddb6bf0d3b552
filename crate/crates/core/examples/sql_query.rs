//! Parses a query from the template grammar and runs it over a small table.
//!
//! cargo run --example sql_query -- "SELECT hotel FROM T ORDER BY floors DESC LIMIT 1"

use pasta::sql::{evaluate_traced, parse_query};
use pasta::table::Table;

fn hotels() -> Table {
    let rows = [
        ["wynn", "45", "2005"],
        ["las vegas hilton", "30", "1969"],
        ["palazzo", "53", "2007"],
        ["bellagio", "36", "1998"],
    ];
    Table::new(
        "hotels",
        vec!["hotel".into(), "floors".into(), "year".into()],
        rows.iter().map(|r| r.map(String::from).to_vec()).collect(),
    )
}

fn main() {
    let queries: Vec<String> = match std::env::args().nth(1) {
        Some(q) => vec![q],
        None => [
            "SELECT hotel FROM T ORDER BY floors DESC LIMIT 1",
            "SELECT AVG(floors) FROM T",
            "SELECT COUNT(DISTINCT hotel) FROM T WHERE year > 2000",
            "SELECT MAX(floors) FROM T WHERE floors < ( SELECT MAX(floors) FROM T )",
            "SELECT year FROM T WHERE hotel = 'palazzo'",
            "SELECT stars FROM T",
            "SELECT \"hotel name\" FROM T",
        ]
        .map(String::from)
        .to_vec(),
    };
    let table = hotels();
    for q in queries {
        println!("{q}");
        let plan = match parse_query(&q) {
            Ok(p) => p,
            Err(e) => {
                println!("  parse error: {e}");
                continue;
            }
        };
        match evaluate_traced(&plan, &table) {
            Ok((result, trace)) => println!(
                "  answer {:?} (rows {:?})",
                result.render(&plan.projection),
                trace.ordered_rows
            ),
            Err(e) => println!("  error: {e}"),
        }
    }
}
