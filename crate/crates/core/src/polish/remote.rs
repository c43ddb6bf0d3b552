//! HTTP client for an out-of-process masked-LM scorer.
//!
//! Request: `POST {"items":[{"masked_sentence": s, "candidates": [w, ...]}, ...]}`.
//! Response: `{"scores": [[f, ...], ...]}`, one row per item, one finite
//! score per candidate, in request order.

use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Items per HTTP request.
pub const MAX_BATCH: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum RemoteError {
    #[error("empty candidate list")]
    NoCandidates,
    #[error("no scorer endpoint configured")]
    NoEndpoint,
    #[error("scorer request failed: {0}")]
    Transport(String),
    #[error("scorer returned HTTP {0}")]
    Status(u16),
    #[error("malformed scorer response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScoreItem {
    pub masked_sentence: String,
    pub candidates: Vec<String>,
}

#[derive(Serialize)]
struct Request<'a> {
    items: &'a [ScoreItem],
}

#[derive(Deserialize)]
struct Response {
    scores: Vec<Vec<f64>>,
}

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

/// Scores one batch (at most [`MAX_BATCH`] items) with a single request.
pub fn score_batch(
    endpoint: &str,
    timeout: Duration,
    items: &[ScoreItem],
) -> Result<Vec<Vec<f64>>, RemoteError> {
    if items.iter().any(|i| i.candidates.is_empty()) {
        return Err(RemoteError::NoCandidates);
    }
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let mut resp = agent(timeout)
        .post(endpoint)
        .send_json(Request { items })
        .map_err(|e| RemoteError::Transport(e.to_string()))?;
    let status = resp.status().as_u16();
    if !(200..300).contains(&status) {
        return Err(RemoteError::Status(status));
    }
    let body: Response = resp
        .body_mut()
        .read_json()
        .map_err(|e| RemoteError::Malformed(e.to_string()))?;
    if body.scores.len() != items.len() {
        return Err(RemoteError::Malformed(format!(
            "{} score rows for {} items",
            body.scores.len(),
            items.len()
        )));
    }
    for (row, item) in body.scores.iter().zip(items) {
        if row.len() != item.candidates.len() {
            return Err(RemoteError::Malformed(format!(
                "{} scores for {} candidates",
                row.len(),
                item.candidates.len()
            )));
        }
        if row.iter().any(|s| !s.is_finite()) {
            return Err(RemoteError::Malformed("non-finite score".into()));
        }
    }
    Ok(body.scores)
}

/// Splits `items` into batches and issues up to `concurrency` requests at
/// once. Each batch's outcome is returned in input order.
pub fn score_batched(
    endpoint: &str,
    timeout: Duration,
    items: &[ScoreItem],
    concurrency: usize,
) -> Vec<Result<Vec<Vec<f64>>, RemoteError>> {
    let batches: Vec<&[ScoreItem]> = items.chunks(MAX_BATCH).collect();
    let mut results: Vec<Option<Result<Vec<Vec<f64>>, RemoteError>>> =
        (0..batches.len()).map(|_| None).collect();
    for wave in (0..batches.len())
        .collect::<Vec<_>>()
        .chunks(concurrency.max(1))
    {
        std::thread::scope(|s| {
            let handles: Vec<_> = wave
                .iter()
                .map(|&b| {
                    let batch = batches[b];
                    (b, s.spawn(move || score_batch(endpoint, timeout, batch)))
                })
                .collect();
            for (b, h) in handles {
                results[b] = Some(
                    h.join()
                        .unwrap_or_else(|_| Err(RemoteError::Transport("worker panicked".into()))),
                );
            }
        });
    }
    results.into_iter().map(Option::unwrap).collect()
}
