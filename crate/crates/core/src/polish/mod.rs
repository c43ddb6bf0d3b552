//! Context-sensitive word polishing: pick the most natural candidate for a
//! template word such as "higher" given the instantiated sentence.

pub mod remote;

use std::collections::HashSet;
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use remote::{RemoteError, ScoreItem};

use crate::template::{word_occurrences, Instantiation};
use crate::text::{tokenize, MASK};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub anchor: String,
    pub candidates: Vec<String>,
}

impl CandidateSet {
    pub fn new(anchor: &str, candidates: &[&str]) -> Result<Self, PolishError> {
        if candidates.is_empty() || !candidates.contains(&anchor) {
            return Err(PolishError::BadCandidateSet(anchor.to_string()));
        }
        Ok(CandidateSet {
            anchor: anchor.to_string(),
            candidates: candidates.iter().map(|s| s.to_string()).collect(),
        })
    }
}

/// The four shipped sets, one per context-sensitive template word.
pub fn default_candidate_sets() -> Vec<CandidateSet> {
    [
        (
            "highest",
            &[
                "highest", "most", "biggest", "largest", "oldest", "greatest", "heaviest",
                "longest", "tallest",
            ][..],
        ),
        (
            "lowest",
            &["lowest", "least", "smallest", "youngest", "shortest"][..],
        ),
        (
            "higher",
            &["higher", "more", "bigger", "larger", "older"][..],
        ),
        ("less", &["less", "smaller", "lower", "younger"][..]),
    ]
    .into_iter()
    .map(|(a, c)| CandidateSet::new(a, c).expect("shipped sets are valid"))
    .collect()
}

pub fn find_set<'a>(sets: &'a [CandidateSet], anchor: &str) -> Option<&'a CandidateSet> {
    sets.iter().find(|s| s.anchor == anchor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Lexicon,
    Remote,
}

impl std::str::FromStr for ScorerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lexicon" => Ok(ScorerKind::Lexicon),
            "remote" => Ok(ScorerKind::Remote),
            other => Err(format!(
                "unknown scorer {other:?} (expected lexicon or remote)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerBinding {
    pub kind: ScorerKind,
    pub endpoint: Option<String>,
    pub timeout: Duration,
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

impl ScorerBinding {
    pub fn lexicon() -> Self {
        ScorerBinding {
            kind: ScorerKind::Lexicon,
            endpoint: None,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn remote(endpoint: impl Into<String>, timeout: Duration) -> Self {
        ScorerBinding {
            kind: ScorerKind::Remote,
            endpoint: Some(endpoint.into()),
            timeout,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolishError {
    #[error("candidate set for {0:?} must be non-empty and contain its anchor")]
    BadCandidateSet(String),
    #[error("anchor {anchor:?} occurs {count} times, expected exactly once")]
    AnchorCount { anchor: String, count: usize },
    #[error(transparent)]
    Remote(#[from] RemoteError),
}

/// Header keywords and the candidates they make natural.
const LEXICON: [(&str, &[&str]); 5] = [
    ("age", &["older", "oldest", "younger", "youngest"]),
    ("height", &["taller", "tallest", "shorter", "shortest"]),
    ("weight", &["heavier", "heaviest"]),
    ("length", &["longer", "longest", "shorter", "shortest"]),
    ("duration", &["longer", "longest", "shorter", "shortest"]),
];

/// Deterministic keyword scorer: 2 for a candidate preferred by a keyword in
/// the sentence, 1 for the anchor, 0 otherwise.
pub fn lexicon_scores(masked_sentence: &str, anchor: &str, candidates: &[String]) -> Vec<f64> {
    let tokens: HashSet<String> = tokenize(masked_sentence).into_iter().collect();
    let preferred: HashSet<&str> = LEXICON
        .iter()
        .filter(|(k, _)| tokens.contains(*k))
        .flat_map(|(_, words)| words.iter().copied())
        .collect();
    candidates
        .iter()
        .map(|c| {
            if preferred.contains(c.as_str()) {
                2.0
            } else if c == anchor {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Index of the highest score, earliest candidate winning ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn score_candidates_remote(
    masked_sentence: &str,
    candidates: &[String],
    binding: &ScorerBinding,
) -> Result<Vec<f64>, RemoteError> {
    let endpoint = binding.endpoint.as_deref().ok_or(RemoteError::NoEndpoint)?;
    let item = ScoreItem {
        masked_sentence: masked_sentence.to_string(),
        candidates: candidates.to_vec(),
    };
    Ok(remote::score_batch(endpoint, binding.timeout, &[item])?.remove(0))
}

/// A scorer binding plus run-time policy and the fallback counter.
#[derive(Debug)]
pub struct Scorer {
    pub binding: ScorerBinding,
    /// Abort instead of falling back to the lexicon when the remote fails.
    pub strict: bool,
    /// Remote requests in flight at once.
    pub concurrency: usize,
    warnings: AtomicU64,
}

impl Scorer {
    pub fn new(binding: ScorerBinding) -> Self {
        Scorer {
            binding,
            strict: false,
            concurrency: 4,
            warnings: AtomicU64::new(0),
        }
    }

    pub fn lexicon() -> Self {
        Scorer::new(ScorerBinding::lexicon())
    }

    /// Items scored by the lexicon because the remote scorer failed.
    pub fn warnings(&self) -> u64 {
        self.warnings.load(Ordering::Relaxed)
    }

    /// Scores each item; `anchors[i]` is the anchor of item `i`, used by the
    /// lexicon scorer.
    pub fn score(
        &self,
        items: &[ScoreItem],
        anchors: &[&str],
    ) -> Result<Vec<Vec<f64>>, PolishError> {
        let lexicon =
            |i: usize| lexicon_scores(&items[i].masked_sentence, anchors[i], &items[i].candidates);
        let endpoint = match (self.binding.kind, &self.binding.endpoint) {
            (ScorerKind::Remote, Some(e)) => e,
            (ScorerKind::Remote, None) if self.strict => return Err(RemoteError::NoEndpoint.into()),
            _ => return Ok((0..items.len()).map(lexicon).collect()),
        };
        let outcomes =
            remote::score_batched(endpoint, self.binding.timeout, items, self.concurrency);
        let mut scores = Vec::with_capacity(items.len());
        for (b, outcome) in outcomes.into_iter().enumerate() {
            let start = b * remote::MAX_BATCH;
            let end = (start + remote::MAX_BATCH).min(items.len());
            match outcome {
                Ok(rows) => scores.extend(rows),
                Err(e) if self.strict => return Err(e.into()),
                Err(_) => {
                    self.warnings
                        .fetch_add((end - start) as u64, Ordering::Relaxed);
                    scores.extend((start..end).map(lexicon));
                }
            }
        }
        Ok(scores)
    }
}

fn unique_anchor(sentence: &str, anchor: &str) -> Result<Range<usize>, PolishError> {
    let hits = word_occurrences(sentence, anchor);
    if hits.len() != 1 {
        return Err(PolishError::AnchorCount {
            anchor: anchor.to_string(),
            count: hits.len(),
        });
    }
    Ok(hits[0].clone())
}

fn masked(sentence: &str, span: &Range<usize>) -> String {
    format!("{}{MASK}{}", &sentence[..span.start], &sentence[span.end..])
}

/// Replaces the single occurrence of `anchor` by the best-scoring candidate.
pub fn polish(
    sentence: &str,
    anchor: &str,
    set: &CandidateSet,
    scorer: &Scorer,
) -> Result<String, PolishError> {
    let span = unique_anchor(sentence, anchor)?;
    let item = ScoreItem {
        masked_sentence: masked(sentence, &span),
        candidates: set.candidates.clone(),
    };
    let scores = scorer.score(std::slice::from_ref(&item), &[anchor])?;
    let word = &set.candidates[argmax(&scores[0])];
    Ok(format!(
        "{}{word}{}",
        &sentence[..span.start],
        &sentence[span.end..]
    ))
}

fn shift(span: &Range<usize>, at: &Range<usize>, new_len: usize) -> Range<usize> {
    if span == at {
        return at.start..at.start + new_len;
    }
    if span.start >= at.end {
        let delta = new_len as isize - at.len() as isize;
        return (span.start as isize + delta) as usize..(span.end as isize + delta) as usize;
    }
    span.clone()
}

fn apply(mut inst: Instantiation, at: Range<usize>, word: &str) -> Instantiation {
    inst.sentence.replace_range(at.clone(), word);
    inst.answer_span = shift(&inst.answer_span, &at, word.len());
    inst.mask_word_span = inst
        .mask_word_span
        .as_ref()
        .map(|s| shift(s, &at, word.len()));
    inst.sensitive_span = Some(at.start..at.start + word.len());
    inst
}

#[derive(Debug, Default)]
pub struct PolishOutput {
    /// Surviving instantiations in input order.
    pub kept: Vec<Instantiation>,
    /// Sentences where the anchor was not a unique whole word.
    pub dropped: usize,
}

/// Polishes every instantiation whose template names a sensitive word that
/// has a candidate set; others pass through unchanged.
pub fn polish_instantiations(
    insts: Vec<Instantiation>,
    sets: &[CandidateSet],
    scorer: &Scorer,
) -> Result<PolishOutput, PolishError> {
    enum Slot<'a> {
        Keep(Instantiation),
        Polish(Instantiation, Range<usize>, &'a CandidateSet),
    }
    let mut dropped = 0;
    let mut slots = Vec::with_capacity(insts.len());
    for inst in insts {
        let set = inst
            .template
            .sensitive_word
            .as_deref()
            .and_then(|w| find_set(sets, w));
        match set {
            None => slots.push(Slot::Keep(inst)),
            Some(set) => match unique_anchor(&inst.sentence, &set.anchor) {
                Ok(span) => slots.push(Slot::Polish(inst, span, set)),
                Err(_) => dropped += 1,
            },
        }
    }
    let mut items = Vec::new();
    let mut anchors = Vec::new();
    for slot in &slots {
        if let Slot::Polish(inst, span, set) = slot {
            items.push(ScoreItem {
                masked_sentence: masked(&inst.sentence, span),
                candidates: set.candidates.clone(),
            });
            anchors.push(set.anchor.as_str());
        }
    }
    let mut scores = scorer.score(&items, &anchors)?.into_iter();
    let kept = slots
        .into_iter()
        .map(|slot| match slot {
            Slot::Keep(inst) => inst,
            Slot::Polish(inst, span, set) => {
                let row = scores.next().expect("one score row per item");
                let word = set.candidates[argmax(&row)].clone();
                apply(inst, span, &word)
            }
        })
        .collect();
    Ok(PolishOutput { kept, dropped })
}
