use std::collections::BTreeSet;

use proptest::prelude::*;

use pasta::finetune::{prepare_pair, rank_rows, select_columns, PrepOptions, Statement};
use pasta::table::Table;
use pasta::text::STOPWORDS;

const VOCAB: [&str; 14] = [
    "the", "Palazzo", "floors", "is", "53", "wynn", "hotel", "year", "of", "Vegas", "2005", "las",
    "has", "tower",
];

fn words(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(&VOCAB[..]), 0..max).prop_map(|w| w.join(" "))
}

fn table() -> impl Strategy<Value = Table> {
    (1usize..5, 1usize..9).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(words(3), m),
            prop::collection::vec(prop::collection::vec(words(4), m), n),
        )
            .prop_map(|(headers, rows)| Table::new("t", headers, rows))
    })
}

/// Lowercased ASCII alphanumeric runs minus stopwords.
fn token_set(text: &str) -> BTreeSet<String> {
    text.to_ascii_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty() && !STOPWORDS.contains(w))
        .map(str::to_string)
        .collect()
}

fn overlap(statement: &str, row: &[String]) -> usize {
    let s = token_set(statement);
    token_set(&row.join(" ")).intersection(&s).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ranking_properties(t in table(), text in words(8)) {
        let s = Statement::new("s", &text, "t");
        let ranked = rank_rows(&s, &t);
        let n = t.num_rows();
        let mut order = ranked.row_order.clone();
        order.sort_unstable();
        prop_assert_eq!(order, (0..n).collect::<Vec<_>>());
        for (i, &r) in ranked.row_order.iter().enumerate() {
            prop_assert_eq!(ranked.row_scores[i], overlap(&text, &t.rows[r]));
        }
        for w in ranked.row_scores.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for (i, w) in ranked.row_order.windows(2).enumerate() {
            if ranked.row_scores[i] == ranked.row_scores[i + 1] {
                prop_assert!(w[0] < w[1], "tie broken out of table order");
            }
        }
    }

    #[test]
    fn selection_keeps_rows_and_linked_columns(t in table(), text in words(8)) {
        let s = Statement::new("s", &text, "t");
        let sel = select_columns(&s, &t);
        prop_assert_eq!(sel.num_rows(), t.num_rows());
        let st = token_set(&text);
        let linked: Vec<usize> = (0..t.num_columns())
            .filter(|&c| {
                std::iter::once(&t.headers[c])
                    .chain(t.rows.iter().map(|r| &r[c]))
                    .any(|cell| !token_set(cell).is_disjoint(&st))
            })
            .collect();
        let expected: Vec<String> = if linked.is_empty() {
            t.headers.clone()
        } else {
            linked.iter().map(|&c| t.headers[c].clone()).collect()
        };
        prop_assert_eq!(sel.headers, expected);
    }

    #[test]
    fn duplicate_tokens_do_not_change_scores(t in table(), text in words(8)) {
        let s = Statement::new("s", &text, "t");
        let mut doubled = t.clone();
        for row in &mut doubled.rows {
            for cell in row.iter_mut() {
                *cell = format!("{cell} {cell}");
            }
        }
        prop_assert_eq!(rank_rows(&s, &t).row_scores, rank_rows(&s, &doubled).row_scores);
    }

    #[test]
    fn budget_truncates_to_whole_rows(t in table(), text in words(8), budget in 1usize..40) {
        let s = Statement::new("s", &text, "t");
        let opts = PrepOptions { budget, select_columns: false, rank_rows: true };
        match prepare_pair(&s, &t, opts) {
            Ok(rec) => {
                let rows = rec.linearized_table.matches("[Row]").count();
                prop_assert_eq!(rows, t.num_rows().min(budget / t.num_columns()));
            }
            Err(_) => prop_assert!(budget < t.num_columns()),
        }
    }
}

fn hotels() -> Table {
    let rows = [
        ["wynn", "45", "2005", "las vegas strip"],
        ["las vegas hilton", "30", "1969", "paradise"],
        ["palazzo", "53", "2007", "las vegas strip"],
    ];
    Table::new(
        "hotels",
        ["hotel", "floors", "year", "location"]
            .map(String::from)
            .to_vec(),
        rows.iter().map(|r| r.map(String::from).to_vec()).collect(),
    )
}

#[test]
fn ablations_change_the_output() {
    let s = Statement::new(
        "1",
        "the palazzo has more floors than las vegas hilton",
        "hotels",
    );
    let full = prepare_pair(&s, &hotels(), PrepOptions::default()).unwrap();
    let no_col = prepare_pair(
        &s,
        &hotels(),
        PrepOptions {
            select_columns: false,
            ..Default::default()
        },
    )
    .unwrap();
    let no_row = prepare_pair(
        &s,
        &hotels(),
        PrepOptions {
            rank_rows: false,
            ..Default::default()
        },
    )
    .unwrap();
    // hilton and palazzo rows share three tokens with the statement, wynn two
    assert_eq!(
        full.linearized_table,
        "[Header] hotel | floors | location [Row] las vegas hilton | 30 | paradise \
         [Row] palazzo | 53 | las vegas strip [Row] wynn | 45 | las vegas strip"
    );
    assert_ne!(full, no_col);
    assert_ne!(full, no_row);
}
