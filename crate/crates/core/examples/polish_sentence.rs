//! Replaces a context-sensitive word by the best candidate. Uses the
//! built-in lexicon, or a remote scorer when a URL is given.
//!
//! cargo run --example polish_sentence -- ["sentence"] [anchor] [scorer-url]

use std::time::Duration;

use pasta::polish::{default_candidate_sets, find_set, polish, Scorer, ScorerBinding};

fn main() {
    let mut args = std::env::args().skip(1);
    let sentence = args
        .next()
        .unwrap_or_else(|| "alice has higher age than bob".into());
    let anchor = args.next().unwrap_or_else(|| "higher".into());
    let scorer = match args.next() {
        Some(url) => Scorer::new(ScorerBinding::remote(url, Duration::from_secs(5))),
        None => Scorer::lexicon(),
    };
    let sets = default_candidate_sets();
    let Some(set) = find_set(&sets, &anchor) else {
        eprintln!("no candidate set for {anchor:?}");
        std::process::exit(2);
    };
    println!("candidates {:?}", set.candidates);
    match polish(&sentence, &anchor, set, &scorer) {
        Ok(s) => println!("{s}"),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
    if scorer.warnings() > 0 {
        eprintln!("remote scorer failed; lexicon was used");
    }
}
