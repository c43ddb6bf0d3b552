//! Helpers shared by integration tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

/// How the mock scorer answers.
#[derive(Clone, Copy, Debug)]
pub enum Behavior {
    /// Scores 5.0 for candidates equal to the word, 0.5 for every other.
    Prefer(&'static str),
    /// Sleeps this long before answering with `Prefer`.
    Slow(Duration, &'static str),
    /// Answers HTTP 500.
    Fail,
    /// Answers 200 with one score row too few.
    Short,
}

/// A local HTTP server speaking the scorer protocol.
pub struct MockScorer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

impl MockScorer {
    pub fn start(behavior: Behavior) -> MockScorer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/score", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let counter = requests.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let counter = counter.clone();
                thread::spawn(move || {
                    counter.fetch_add(1, Ordering::SeqCst);
                    let _ = serve(stream, behavior);
                });
            }
        });
        MockScorer { url, requests }
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, behavior: Behavior) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    let request: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
    let items = request["items"].as_array().cloned().unwrap_or_default();
    let score = |word: &str| -> serde_json::Value {
        let rows: Vec<Vec<f64>> = items
            .iter()
            .map(|item| {
                item["candidates"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|c| if c.as_str() == Some(word) { 5.0 } else { 0.5 })
                    .collect()
            })
            .collect();
        serde_json::json!({ "scores": rows })
    };
    let (status, payload) = match behavior {
        Behavior::Prefer(w) => ("200 OK", score(w)),
        Behavior::Slow(d, w) => {
            thread::sleep(d);
            ("200 OK", score(w))
        }
        Behavior::Fail => ("500 Internal Server Error", serde_json::json!({})),
        Behavior::Short => {
            let mut v = score("x");
            v["scores"].as_array_mut().unwrap().pop();
            ("200 OK", v)
        }
    };
    let text = payload.to_string();
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    )?;
    stream.flush()
}
