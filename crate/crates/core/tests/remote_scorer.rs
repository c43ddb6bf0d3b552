mod common;

use std::time::{Duration, Instant};

use common::{Behavior, MockScorer};
use pasta::polish::remote::{score_batch, score_batched, ScoreItem, MAX_BATCH};
use pasta::polish::{
    default_candidate_sets, find_set, polish, PolishError, RemoteError, Scorer, ScorerBinding,
};

const AGE: &str = "alice has higher age than bob";

fn remote(url: &str, timeout: Duration, strict: bool) -> Scorer {
    let mut s = Scorer::new(ScorerBinding::remote(url, timeout));
    s.strict = strict;
    s
}

#[test]
fn argmax_follows_remote_scores() {
    let server = MockScorer::start(Behavior::Prefer("bigger"));
    let sets = default_candidate_sets();
    let set = find_set(&sets, "higher").unwrap();
    let scorer = remote(&server.url, Duration::from_secs(5), true);
    // the lexicon would pick "older" here; the remote says "bigger"
    assert_eq!(
        polish(AGE, "higher", set, &scorer).unwrap(),
        "alice has bigger age than bob"
    );
    assert_eq!(scorer.warnings(), 0);
    assert_eq!(server.request_count(), 1);
}

#[test]
fn timeout_falls_back_to_lexicon() {
    let server = MockScorer::start(Behavior::Slow(Duration::from_secs(3), "bigger"));
    let sets = default_candidate_sets();
    let set = find_set(&sets, "higher").unwrap();
    let scorer = remote(&server.url, Duration::from_millis(300), false);
    let started = Instant::now();
    assert_eq!(
        polish(AGE, "higher", set, &scorer).unwrap(),
        "alice has older age than bob"
    );
    assert!(started.elapsed() < Duration::from_secs(3));
    assert_eq!(scorer.warnings(), 1);
}

#[test]
fn strict_mode_surfaces_failures() {
    let sets = default_candidate_sets();
    let set = find_set(&sets, "higher").unwrap();
    let server = MockScorer::start(Behavior::Fail);
    let err = polish(
        AGE,
        "higher",
        set,
        &remote(&server.url, Duration::from_secs(5), true),
    )
    .unwrap_err();
    assert!(
        matches!(err, PolishError::Remote(RemoteError::Status(500))),
        "{err}"
    );
    let server = MockScorer::start(Behavior::Slow(Duration::from_secs(3), "more"));
    let err = polish(
        AGE,
        "higher",
        set,
        &remote(&server.url, Duration::from_millis(200), true),
    )
    .unwrap_err();
    assert!(
        matches!(err, PolishError::Remote(RemoteError::Transport(_))),
        "{err}"
    );
}

#[test]
fn malformed_response_is_rejected() {
    let server = MockScorer::start(Behavior::Short);
    let items = vec![
        ScoreItem {
            masked_sentence: "a [MASK] b".into(),
            candidates: vec!["x".into(), "y".into()]
        };
        2
    ];
    let err = score_batch(&server.url, Duration::from_secs(5), &items).unwrap_err();
    assert!(matches!(err, RemoteError::Malformed(_)), "{err}");
}

#[test]
fn large_inputs_are_batched() {
    let server = MockScorer::start(Behavior::Prefer("y"));
    let items: Vec<ScoreItem> = (0..MAX_BATCH * 2 + 5)
        .map(|i| ScoreItem {
            masked_sentence: format!("s{i} [MASK]"),
            candidates: vec!["x".into(), "y".into()],
        })
        .collect();
    let out = score_batched(&server.url, Duration::from_secs(5), &items, 2);
    assert_eq!(out.len(), 3);
    let rows: Vec<Vec<f64>> = out.into_iter().flat_map(Result::unwrap).collect();
    assert_eq!(rows.len(), items.len());
    assert!(rows.iter().all(|r| r == &[0.5, 5.0]));
    assert_eq!(server.request_count(), 3);
}
