//! Cloze examples: masking, table linearization, corpus writing and
//! corpus statistics.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::table::Table;
use crate::template::{Instantiation, OpType};
use crate::text::{whitespace_len, MASK};

pub const HEADER_MARK: &str = "[Header]";
pub const ROW_MARK: &str = "[Row]";
pub const CELL_SEP: &str = "|";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeExample {
    pub id: String,
    pub op_type: OpType,
    pub table_id: String,
    pub sentence: String,
    pub masked_sentence: String,
    pub answer: String,
    /// Byte offsets of `answer` in `sentence`, serialized as `[start, end]`.
    #[serde(with = "span_pair")]
    pub answer_span: Range<usize>,
    pub linearized_table: String,
}

impl ClozeExample {
    /// Puts the answer back in place of the mask.
    pub fn unmask(&self) -> String {
        let start = self.answer_span.start;
        format!(
            "{}{}{}",
            &self.masked_sentence[..start],
            self.answer,
            &self.masked_sentence[start + MASK.len()..]
        )
    }

    /// `(table id, within-table index)` parsed from the id.
    pub fn order_key(&self) -> (&str, usize) {
        let index = self
            .id
            .rsplit_once(':')
            .and_then(|(_, i)| i.parse().ok())
            .unwrap_or(usize::MAX);
        (&self.table_id, index)
    }
}

mod span_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::ops::Range;

    pub fn serialize<S: Serializer>(r: &Range<usize>, s: S) -> Result<S::Ok, S::Error> {
        [r.start, r.end].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Range<usize>, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(d)?;
        Ok(start..end)
    }
}

pub fn example_id(table_id: &str, index: usize) -> String {
    format!("{table_id}:{index:03}")
}

#[derive(Debug, thiserror::Error)]
pub enum ClozeError {
    #[error("mask span {span:?} does not fall on a word of {sentence:?}")]
    BadSpan {
        sentence: String,
        span: Range<usize>,
    },
    #[error("examples out of order: {prev} before {next}")]
    OutOfOrder { prev: String, next: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Masks the instantiation's target span. `linearized_table` is left empty
/// for the caller to fill.
pub fn mask_answer(
    inst: &Instantiation,
    table_id: &str,
    index: usize,
) -> Result<ClozeExample, ClozeError> {
    let span = inst.mask_span();
    let s = &inst.sentence;
    let ok = span.start < span.end
        && span.end <= s.len()
        && s.is_char_boundary(span.start)
        && s.is_char_boundary(span.end)
        && !s[span.clone()].trim().is_empty();
    if !ok {
        return Err(ClozeError::BadSpan {
            sentence: s.clone(),
            span,
        });
    }
    Ok(ClozeExample {
        id: example_id(table_id, index),
        op_type: inst.op_type(),
        table_id: table_id.to_string(),
        sentence: s.clone(),
        masked_sentence: format!("{}{MASK}{}", &s[..span.start], &s[span.end..]),
        answer: s[span.clone()].to_string(),
        answer_span: span,
        linearized_table: String::new(),
    })
}

/// `[Header] h1 | h2 [Row] c11 | c12 [Row] ...` over normalized text.
pub fn linearize(table: &Table) -> String {
    let mut parts: Vec<String> = vec![HEADER_MARK.to_string()];
    let push_row = |cells: Vec<String>, parts: &mut Vec<String>| {
        for (i, c) in cells.into_iter().enumerate() {
            if i > 0 {
                parts.push(CELL_SEP.to_string());
            }
            parts.push(c);
        }
    };
    push_row(
        (0..table.num_columns()).map(|c| table.header(c)).collect(),
        &mut parts,
    );
    for r in 0..table.num_rows() {
        parts.push(ROW_MARK.to_string());
        push_row(
            (0..table.num_columns()).map(|c| table.cell(r, c)).collect(),
            &mut parts,
        );
    }
    parts.join(" ")
}

/// Parses a linearized table back into header and row cells.
pub fn parse_linearized(s: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let body = s.strip_prefix(HEADER_MARK)?;
    let marker = format!(" {ROW_MARK}");
    let mut blocks = body.split(marker.as_str());
    let cells = |block: &str| -> Vec<String> {
        let block = block.strip_prefix(' ').unwrap_or(block);
        block.split(" | ").map(str::to_string).collect()
    };
    let headers = cells(blocks.next()?);
    let rows: Vec<Vec<String>> = blocks.map(cells).collect();
    rows.iter()
        .all(|r| r.len() == headers.len())
        .then_some((headers, rows))
}

/// Streaming JSONL writer. Lines go to a temporary file in the target
/// directory that is renamed into place by [`CorpusWriter::finish`], so a
/// failed run leaves no partial corpus. Examples must arrive ordered by
/// `(table id, within-table index)`.
pub struct CorpusWriter {
    path: std::path::PathBuf,
    out: BufWriter<tempfile::NamedTempFile>,
    prev: Option<(String, usize, String)>,
    count: usize,
}

impl CorpusWriter {
    pub fn create(path: &Path) -> Result<Self, ClozeError> {
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
        Ok(CorpusWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(tmp),
            prev: None,
            count: 0,
        })
    }

    pub fn write(&mut self, ex: &ClozeExample) -> Result<(), ClozeError> {
        let (table, index) = ex.order_key();
        if let Some((pt, pi, pid)) = &self.prev {
            if (pt.as_str(), *pi) >= (table, index) {
                return Err(ClozeError::OutOfOrder {
                    prev: pid.clone(),
                    next: ex.id.clone(),
                });
            }
        }
        self.prev = Some((table.to_string(), index, ex.id.clone()));
        write_line(&mut self.out, ex).map_err(|e| io_error(&self.path, e))?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(self) -> Result<usize, ClozeError> {
        let path = self.path;
        let tmp = self
            .out
            .into_inner()
            .map_err(|e| io_error(&path, e.into_error()))?;
        tmp.as_file().sync_all().map_err(|e| io_error(&path, e))?;
        tmp.persist(&path).map_err(|e| io_error(&path, e.error))?;
        Ok(self.count)
    }
}

pub(crate) fn write_line<W: Write, T: Serialize>(w: &mut W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

fn io_error(path: &Path, source: std::io::Error) -> ClozeError {
    ClozeError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes a whole ordered stream with a [`CorpusWriter`].
pub fn emit_corpus<I>(examples: I, path: &Path) -> Result<usize, ClozeError>
where
    I: IntoIterator<Item = ClozeExample>,
{
    let mut w = CorpusWriter::create(path)?;
    for ex in examples {
        w.write(&ex)?;
    }
    w.finish()
}

pub fn read_corpus(path: &Path) -> Result<Vec<ClozeExample>, ClozeError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| ClozeError::Parse {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    #[serde(rename = "type")]
    pub op_type: OpType,
    pub count: usize,
    pub share: f64,
    /// Mean whitespace-token answer length.
    pub len_ans: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// One row per operation type, in table order.
    pub rows: Vec<TypeStats>,
    pub total: usize,
    pub len_ans: f64,
}

/// Running per-type counts for [`CorpusStats`].
#[derive(Debug, Clone, Default)]
pub struct StatsTally {
    counts: BTreeMap<OpType, (usize, usize)>,
}

impl StatsTally {
    pub fn add(&mut self, ex: &ClozeExample) {
        let e = self.counts.entry(ex.op_type).or_default();
        e.0 += 1;
        e.1 += whitespace_len(&ex.answer);
    }

    pub fn finish(&self) -> CorpusStats {
        let total: usize = self.counts.values().map(|(c, _)| c).sum();
        let tokens: usize = self.counts.values().map(|(_, t)| t).sum();
        let mean = |t: usize, c: usize| if c == 0 { 0.0 } else { t as f64 / c as f64 };
        let rows = OpType::ALL
            .iter()
            .map(|&op| {
                let (count, toks) = self.counts.get(&op).copied().unwrap_or_default();
                TypeStats {
                    op_type: op,
                    count,
                    share: mean(count, total),
                    len_ans: mean(toks, count),
                }
            })
            .collect();
        CorpusStats {
            rows,
            total,
            len_ans: mean(tokens, total),
        }
    }
}

impl CorpusStats {
    pub fn from_examples<'a>(examples: impl IntoIterator<Item = &'a ClozeExample>) -> Self {
        let mut tally = StatsTally::default();
        for ex in examples {
            tally.add(ex);
        }
        tally.finish()
    }

    pub fn get(&self, op: OpType) -> &TypeStats {
        self.rows
            .iter()
            .find(|r| r.op_type == op)
            .expect("all types present")
    }
}

impl std::fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<12} {:>18} {:>9}",
            "Type", "# Sentence-Table", "Len (Ans)"
        )?;
        for r in &self.rows {
            let cell = format!("{} ({:.0}%)", r.count, r.share * 100.0);
            writeln!(
                f,
                "{:<12} {:>18} {:>9.1}",
                capitalized(r.op_type),
                cell,
                r.len_ans
            )?;
        }
        write!(
            f,
            "{:<12} {:>18} {:>9.1}",
            "Total", self.total, self.len_ans
        )
    }
}

fn capitalized(op: OpType) -> String {
    let name = op.name();
    name[..1].to_uppercase() + &name[1..]
}

pub fn corpus_stats(path: &Path) -> Result<CorpusStats, ClozeError> {
    Ok(CorpusStats::from_examples(&read_corpus(path)?))
}
