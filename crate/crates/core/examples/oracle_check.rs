//! Runs random tables and queries through the evaluator and the brute-force
//! oracle and reports agreement.
//!
//! cargo run --release --example oracle_check -- [trials] [seed]

use pasta::sql::random::verify_oracle;

fn main() {
    let mut args = std::env::args().skip(1);
    let trials = args.next().map_or(10_000, |a| a.parse().expect("trials"));
    let seed = args.next().map_or(0, |a| a.parse().expect("seed"));
    let report = verify_oracle(trials, seed);
    println!(
        "{}/{} agreements ({} errored on both sides)",
        report.agreements, report.trials, report.both_errored
    );
    if let Some(c) = report.first_counterexample {
        println!("{c}");
        std::process::exit(1);
    }
}
