//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! printed.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use common::{Behavior, MockScorer};
use pasta::cloze::linearize;
use pasta::demo::{demo_statements, demo_tables};
use pasta::finetune::{rank_rows, Statement, TriggerCatalog};
use pasta::pipeline::{synthesize_to_files, verify_corpus, SynthOptions, SynthPaths};
use pasta::polish::{default_candidate_sets, find_set, polish, Scorer, ScorerBinding};
use pasta::sql::evaluate;
use pasta::sql::random::compare_with_oracle;
use pasta::table::{write_store, Table};
use pasta::template::{default_templates, OpType};
use pasta::text::STOPWORDS;

/// Tables for the corpus criteria; yields a little over 50K examples.
const CORPUS_TABLES: usize = 1_200;
const CORPUS_SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let report = compare_with_oracle(10_000, 1, evaluate);
    let elapsed = started.elapsed();
    let pass = report.passed() && report.trials == 10_000 && elapsed < Duration::from_secs(60);
    let mut detail = format!(
        "{}/{} agreements ({} errored on both sides) in {:.1?}",
        report.agreements, report.trials, report.both_errored, elapsed
    );
    if let Some(c) = report.first_counterexample {
        detail.push_str(&format!("; first counterexample {c}"));
    }
    outcome(pass, detail)
}

struct Corpus {
    _dir: tempfile::TempDir,
    paths: SynthPaths,
    tables: Vec<Table>,
    stats: pasta::cloze::CorpusStats,
}

fn build_corpus() -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let paths = SynthPaths::beside(&dir.path().join("corpus.jsonl"));
    let tables = demo_tables(CORPUS_TABLES, CORPUS_SEED);
    let (_, stats) = synthesize_to_files(
        tables.clone(),
        &default_templates(),
        &default_candidate_sets(),
        &Scorer::lexicon(),
        &SynthOptions {
            seed: CORPUS_SEED,
            ..Default::default()
        },
        &paths,
    )
    .expect("synthesis");
    Corpus {
        _dir: dir,
        paths,
        tables,
        stats,
    }
}

fn criterion_2(c: &Corpus) -> Outcome {
    let report = verify_corpus(
        &c.paths.corpus,
        c.paths.provenance.as_ref().unwrap(),
        &c.tables,
    )
    .unwrap();
    let pass = report.ok() && report.checked >= 50_000;
    let mut detail = format!(
        "{}/{} examples re-execute to their recorded answer",
        report.passed, report.checked
    );
    if let Some((id, why)) = report.failures.first() {
        detail.push_str(&format!("; first failure {id}: {why}"));
    }
    outcome(pass, detail)
}

fn criterion_3(c: &Corpus) -> Outcome {
    let share = [
        (OpType::Filter, 6.0),
        (OpType::Superlative, 27.0),
        (OpType::Aggregation, 30.0),
        (OpType::Comparative, 27.0),
        (OpType::Ordinal, 8.0),
        (OpType::Unique, 2.0),
    ];
    let len = [
        (OpType::Filter, 3.2),
        (OpType::Superlative, 2.6),
        (OpType::Aggregation, 1.3),
        (OpType::Ordinal, 2.3),
    ];
    let mut pass = c.tables.len() >= 1_000;
    let mut parts = Vec::new();
    for (op, want) in share {
        let s = c.stats.get(op);
        let got = s.share * 100.0;
        let ok = (got - want).abs() <= 2.0;
        pass &= ok;
        parts.push(format!(
            "{op} {got:.1}% (len {:.2}){}",
            s.len_ans,
            if ok { "" } else { " OUT" }
        ));
    }
    for op in [OpType::Comparative, OpType::Unique] {
        if c.stats.get(op).len_ans != 1.0 {
            pass = false;
            parts.push(format!(
                "{op} answer length {} != 1.0",
                c.stats.get(op).len_ans
            ));
        }
    }
    for (op, want) in len {
        let got = c.stats.get(op).len_ans;
        if (got - want).abs() > 0.5 {
            pass = false;
            parts.push(format!(
                "{op} answer length {got:.2} not within 0.5 of {want}"
            ));
        }
    }
    outcome(
        pass,
        format!("{} tables; {}", c.tables.len(), parts.join(", ")),
    )
}

fn criterion_4() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/linearization");
    let mut matched = 0;
    let mut first_miss = None;
    for i in 0..20 {
        let v: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.join(format!("{i:02}.json"))).unwrap(),
        )
        .unwrap();
        let strings = |v: &serde_json::Value| -> Vec<String> {
            v.as_array()
                .unwrap()
                .iter()
                .map(|c| c.as_str().unwrap().to_string())
                .collect()
        };
        let table = Table::new(
            v["tableId"].as_str().unwrap(),
            strings(&v["headers"]),
            v["rows"].as_array().unwrap().iter().map(strings).collect(),
        );
        let expected = std::fs::read_to_string(dir.join(format!("{i:02}.txt"))).unwrap();
        if linearize(&table) == expected.trim_end_matches('\n') {
            matched += 1;
        } else if first_miss.is_none() {
            first_miss = Some(i);
        }
    }
    let mut detail = format!("{matched}/20 fixture tables match byte-exactly");
    if let Some(i) = first_miss {
        detail.push_str(&format!("; first mismatch fixture {i:02}"));
    }
    outcome(matched == 20, detail)
}

fn sha(path: &Path) -> String {
    let digest = Sha256::digest(std::fs::read(path).unwrap());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn criterion_5() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    write_store(&store, &demo_tables(150, 11)).unwrap();
    let mut hashes = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run).join("corpus.jsonl");
        let status = Command::new(env!("CARGO_BIN_EXE_pasta"))
            .args(["synth", "--tables"])
            .arg(&store)
            .args(["--k", "100", "--seed", "7", "--scorer", "lexicon", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(
                false,
                format!("synth failed: {}", String::from_utf8_lossy(&status.stderr)),
            );
        }
        hashes.push(sha(&out));
    }
    let detail = format!("sha256 {} vs {}", &hashes[0][..16], &hashes[1][..16]);
    outcome(hashes[0] == hashes[1], detail)
}

const VOCAB: [&str; 16] = [
    "the", "Palazzo", "floors", "is", "53", "wynn", "hotel", "year", "of", "Vegas", "2005", "las",
    "has", "tower", "there", "Hilton",
];

fn phrase<R: Rng>(rng: &mut R, max: usize) -> String {
    let n = rng.random_range(0..=max);
    (0..n)
        .map(|_| *VOCAB.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn token_set(text: &str) -> BTreeSet<String> {
    text.to_ascii_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty() && !STOPWORDS.contains(w))
        .map(str::to_string)
        .collect()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    for trial in 0..1_000 {
        let m = rng.random_range(1..5);
        let n = rng.random_range(1..10);
        let headers = (0..m).map(|_| phrase(&mut rng, 2)).collect();
        let rows: Vec<Vec<String>> = (0..n)
            .map(|_| (0..m).map(|_| phrase(&mut rng, 4)).collect())
            .collect();
        let table = Table::new("t", headers, rows);
        let text = phrase(&mut rng, 8);
        let ranked = rank_rows(&Statement::new("s", &text, "t"), &table);
        let st = token_set(&text);
        let recomputed = ranked
            .row_order
            .iter()
            .zip(&ranked.row_scores)
            .all(|(&r, &p)| {
                token_set(&table.rows[r].join(" "))
                    .intersection(&st)
                    .count()
                    == p
            });
        let non_increasing = ranked.row_scores.windows(2).all(|w| w[0] >= w[1]);
        let stable = (1..ranked.row_order.len()).all(|i| {
            ranked.row_scores[i - 1] != ranked.row_scores[i]
                || ranked.row_order[i - 1] < ranked.row_order[i]
        });
        if !(recomputed && non_increasing && stable) {
            failures.push(trial);
        }
    }
    let hotels = Table::new(
        "hotels",
        ["hotel", "floors", "year", "location"]
            .map(String::from)
            .to_vec(),
        [
            ["wynn", "45", "2005", "las vegas strip"],
            ["las vegas hilton", "30", "1969", "paradise"],
            ["palazzo", "53", "2007", "las vegas strip"],
        ]
        .iter()
        .map(|r| r.map(String::from).to_vec())
        .collect(),
    );
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    write_store(&store, &[hotels]).unwrap();
    let data = dir.path().join("statements.jsonl");
    let s = Statement::new(
        "1",
        "the palazzo has more floors than las vegas hilton",
        "hotels",
    );
    std::fs::write(&data, serde_json::to_string(&s).unwrap()).unwrap();
    let prep = |flag: Option<&str>| -> Option<String> {
        let out = dir.path().join(format!("prep{}.jsonl", flag.unwrap_or("")));
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_pasta"));
        cmd.args(["prep", "--budget", "8", "--data"])
            .arg(&data)
            .arg("--tables")
            .arg(&store)
            .arg("--out")
            .arg(&out);
        cmd.args(flag);
        let status = cmd.output().ok()?.status;
        status
            .success()
            .then(|| std::fs::read_to_string(&out).ok())
            .flatten()
    };
    let (full, no_col, no_row) = (prep(None), prep(Some("--no-col")), prep(Some("--no-row")));
    if full.is_none() || no_col.is_none() || no_row.is_none() {
        return outcome(false, "pasta prep failed on the ablation fixture");
    }
    let ablations = full != no_col && full != no_row;
    outcome(
        failures.is_empty() && ablations,
        format!(
            "{}/1000 pairs satisfy ordering, stability and recomputed p_i; --no-col changes output: {}, --no-row changes output: {}",
            1_000 - failures.len(),
            full != no_col,
            full != no_row
        ),
    )
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("test.jsonl");
    let statements = demo_statements(&demo_tables(1_500, 21), 21);
    let lines: Vec<String> = statements
        .iter()
        .map(|s| serde_json::to_string(s).unwrap())
        .collect();
    std::fs::write(&data, lines.join("\n")).unwrap();
    let out = dir.path().join("sets");
    let status = Command::new(env!("CARGO_BIN_EXE_pasta"))
        .args(["split", "--per-type", "200", "--seed", "1", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    if !status.status.success() {
        return outcome(
            false,
            format!("split failed: {}", String::from_utf8_lossy(&status.stderr)),
        );
    }
    let mut sizes = Vec::new();
    let mut ids = HashSet::new();
    let mut total = 0;
    for op in OpType::ALL {
        let text =
            std::fs::read_to_string(out.join(format!("{}.jsonl", op.name()))).unwrap_or_default();
        let n = text.lines().count();
        sizes.push(n);
        total += n;
        for l in text.lines() {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            ids.insert(v["id"].as_str().unwrap().to_string());
        }
    }
    let catalog = TriggerCatalog::default();
    let reference = [
        (
            "the average amount of points among all teams is 29",
            OpType::Aggregation,
        ),
        (
            "there are 5 different nations in the tournament",
            OpType::Unique,
        ),
        (
            "the second largest number of runs was 8529",
            OpType::Ordinal,
        ),
    ];
    let classified = reference
        .iter()
        .filter(|(t, op)| catalog.classify(t) == Some(*op))
        .count();
    let pass = sizes.iter().all(|&n| n == 200) && ids.len() == total && classified == 3;
    outcome(
        pass,
        format!(
            "set sizes {sizes:?}, {} distinct ids of {total}, {classified}/3 reference statements classified as expected",
            ids.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let sets = default_candidate_sets();
    let set = find_set(&sets, "higher").unwrap();
    let sentence = "alice has higher age than bob";
    let lexicon = polish(sentence, "higher", set, &Scorer::lexicon()).unwrap();
    let lexicon_ok = lexicon == "alice has older age than bob";

    let server = MockScorer::start(Behavior::Prefer("larger"));
    let mut remote = Scorer::new(ScorerBinding::remote(&server.url, Duration::from_secs(5)));
    remote.strict = true;
    let argmax_ok = polish(sentence, "higher", set, &remote)
        .is_ok_and(|s| s == "alice has larger age than bob");

    let slow = MockScorer::start(Behavior::Slow(Duration::from_secs(3), "larger"));
    let fallback = Scorer::new(ScorerBinding::remote(&slow.url, Duration::from_millis(300)));
    let fallback_ok = polish(sentence, "higher", set, &fallback).is_ok_and(|s| s == lexicon)
        && fallback.warnings() == 1;
    outcome(
        lexicon_ok && argmax_ok && fallback_ok,
        format!("lexicon picks {lexicon:?}; remote argmax honoured: {argmax_ok}; timeout falls back: {fallback_ok}"),
    )
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let started = Instant::now();
    let corpus = build_corpus();
    let results = [
        (1, "oracle equivalence", criterion_1()),
        (2, "entailment guarantee", criterion_2(&corpus)),
        (3, "corpus shape", criterion_3(&corpus)),
        (4, "linearization golden tests", criterion_4()),
        (5, "determinism", criterion_5()),
        (6, "select-then-rank properties", criterion_6()),
        (7, "trigger split", criterion_7()),
        (8, "polisher contract", criterion_8()),
    ];
    let mut failed = 0;
    for (n, name, o) in &results {
        println!(
            "criterion {n} ({name}): {} - {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1?}",
        results.len() - failed,
        results.len(),
        started.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
