//! NL/SQL template pairs: catalog loading, instantiation against a table and
//! per-table generation.

mod generate;
mod instantiate;

pub use generate::{generate_for_table, table_seed, GenerationConfig};
pub(crate) use instantiate::instantiate_excluding;
pub use instantiate::{fill_answer, instantiate, FillError, Instantiation, PendingInstantiation};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sql::parse_query;

/// The shipped default catalog.
pub const DEFAULT_CATALOG: &str = include_str!("../../assets/templates.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpType {
    Filter,
    Superlative,
    Aggregation,
    Comparative,
    Ordinal,
    Unique,
}

impl OpType {
    /// Statistics-table order.
    pub const ALL: [OpType; 6] = [
        OpType::Filter,
        OpType::Superlative,
        OpType::Aggregation,
        OpType::Comparative,
        OpType::Ordinal,
        OpType::Unique,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpType::Filter => "filter",
            OpType::Superlative => "superlative",
            OpType::Aggregation => "aggregation",
            OpType::Comparative => "comparative",
            OpType::Ordinal => "ordinal",
            OpType::Unique => "unique",
        }
    }
}

impl fmt::Display for OpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown operation type {s:?}"))
    }
}

/// What the cloze task hides: the `[ANS]` slot or a literal word of the NL
/// template (the comparative word, for instance).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaskTarget {
    Answer(AnswerTag),
    Word { word: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerTag {
    Answer,
}

impl MaskTarget {
    pub fn answer() -> Self {
        MaskTarget::Answer(AnswerTag::Answer)
    }

    pub fn word(&self) -> Option<&str> {
        match self {
            MaskTarget::Word { word } => Some(word),
            MaskTarget::Answer(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    Numeric,
    /// Any text column.
    Text,
    /// A text column whose cells are all non-empty and pairwise distinct, so
    /// a cell names exactly one row.
    Entity,
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotConstraint {
    /// `[ColumnK]`: bind a header whose column satisfies `kind`.
    Column { kind: SlotKind },
    /// `[ValueK]`: bind a cell drawn from the column bound to `from`.
    Value { from: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplatePair {
    pub op_type: OpType,
    pub nl: String,
    pub sql: String,
    pub mask_target: MaskTarget,
    #[serde(default)]
    pub sensitive_word: Option<String>,
    pub slot_constraints: BTreeMap<String, SlotConstraint>,
    /// `published-example` or `extension`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("catalog does not parse: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no templates")]
    Empty,
    #[error("catalog lacks operation type {0}")]
    MissingType(OpType),
    #[error("template {index} ({nl:?}): {reason}")]
    Invalid {
        index: usize,
        nl: String,
        reason: String,
    },
}

/// One piece of a template string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Segment<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn is_slot_name(name: &str) -> bool {
    if name == "ANS" {
        return true;
    }
    let digits = name
        .strip_prefix("Column")
        .or_else(|| name.strip_prefix("Value"));
    digits.is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Splits a template into literal text and `[Slot]` references. Any other
/// bracketed token is an error.
pub(crate) fn segments(template: &str) -> Result<Vec<Segment<'_>>, String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('[') {
        let close = rest[open..]
            .find(']')
            .map(|i| open + i)
            .ok_or_else(|| format!("unclosed '[' in {template:?}"))?;
        let name = &rest[open + 1..close];
        if !is_slot_name(name) {
            return Err(format!("unknown placeholder [{name}]"));
        }
        if open > 0 {
            out.push(Segment::Text(&rest[..open]));
        }
        out.push(Segment::Slot(name));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        out.push(Segment::Text(rest));
    }
    Ok(out)
}

fn slots(template: &str) -> Result<BTreeSet<&str>, String> {
    Ok(segments(template)?
        .into_iter()
        .filter_map(|s| match s {
            Segment::Slot(n) => Some(n),
            Segment::Text(_) => None,
        })
        .collect())
}

/// Byte ranges where `word` occurs as a whole word in `text`.
pub fn word_occurrences(text: &str, word: &str) -> Vec<std::ops::Range<usize>> {
    if word.is_empty() {
        return Vec::new();
    }
    let is_word = |c: char| c.is_alphanumeric();
    text.match_indices(word)
        .filter(|(i, _)| {
            let before = text[..*i].chars().next_back();
            let after = text[i + word.len()..].chars().next();
            !before.is_some_and(is_word) && !after.is_some_and(is_word)
        })
        .map(|(i, _)| i..i + word.len())
        .collect()
}

/// Whole-word occurrences of `word` in the literal parts of a template.
fn literal_occurrences(segs: &[Segment<'_>], word: &str) -> usize {
    segs.iter()
        .map(|s| match s {
            Segment::Text(t) => word_occurrences(t, word).len(),
            Segment::Slot(_) => 0,
        })
        .sum()
}

impl TemplatePair {
    /// Checks the pair's invariants.
    pub fn validate(&self) -> Result<(), String> {
        let nl_segs = segments(&self.nl)?;
        let nl_slots = slots(&self.nl)?;
        let sql_slots = slots(&self.sql)?;
        let ans = nl_segs
            .iter()
            .filter(|s| **s == Segment::Slot("ANS"))
            .count();
        if ans != 1 {
            return Err(format!("nl must contain [ANS] exactly once, found {ans}"));
        }
        if sql_slots.contains("ANS") {
            return Err("sql must not contain [ANS]".into());
        }
        // The SQL may constrain columns the sentence only implies (for example
        // the entity column of "[ANS] has the lowest [Column2]"), but every
        // slot the sentence shows must be bound by the query.
        for slot in nl_slots.iter().filter(|s| **s != "ANS") {
            if !sql_slots.contains(slot) {
                return Err(format!("nl placeholder [{slot}] does not appear in sql"));
            }
        }
        for slot in &sql_slots {
            match self.slot_constraints.get(*slot) {
                None => return Err(format!("no slot constraint for [{slot}]")),
                Some(SlotConstraint::Column { .. }) if !slot.starts_with("Column") => {
                    return Err(format!("[{slot}] is not a column slot"));
                }
                Some(SlotConstraint::Value { from }) => {
                    if !slot.starts_with("Value") {
                        return Err(format!("[{slot}] is not a value slot"));
                    }
                    if !sql_slots.contains(from.as_str())
                        || !matches!(
                            self.slot_constraints.get(from),
                            Some(SlotConstraint::Column { .. })
                        )
                    {
                        return Err(format!(
                            "[{slot}] draws from [{from}], which is not a bound column slot"
                        ));
                    }
                }
                _ => {}
            }
        }
        if let Some(extra) = self
            .slot_constraints
            .keys()
            .find(|k| !sql_slots.contains(k.as_str()))
        {
            return Err(format!(
                "slot constraint for [{extra}], which sql does not use"
            ));
        }
        if let Some(word) = self.mask_target.word() {
            if literal_occurrences(&nl_segs, word) != 1 {
                return Err(format!("mask word {word:?} must occur exactly once in nl"));
            }
        }
        if let Some(word) = &self.sensitive_word {
            if literal_occurrences(&nl_segs, word) != 1 {
                return Err(format!(
                    "sensitive word {word:?} must occur exactly once in nl"
                ));
            }
        }
        let probe = self.probe_sql();
        parse_query(&probe).map_err(|e| format!("sql does not parse once bound ({probe}): {e}"))?;
        Ok(())
    }

    /// The SQL with every slot bound to a dummy column or literal.
    fn probe_sql(&self) -> String {
        let Ok(segs) = segments(&self.sql) else {
            return self.sql.clone();
        };
        segs.iter()
            .map(|s| match s {
                Segment::Text(t) => t.to_string(),
                Segment::Slot(name) => match self.slot_constraints.get(*name) {
                    Some(SlotConstraint::Value { .. }) => "1".to_string(),
                    _ => name.to_lowercase(),
                },
            })
            .collect()
    }
}

/// Parses and validates a catalog from JSON text.
pub fn parse_templates(json: &str) -> Result<Vec<TemplatePair>, TemplateError> {
    let catalog: Vec<TemplatePair> = serde_json::from_str(json)?;
    if catalog.is_empty() {
        return Err(TemplateError::Empty);
    }
    for (index, t) in catalog.iter().enumerate() {
        t.validate().map_err(|reason| TemplateError::Invalid {
            index,
            nl: t.nl.clone(),
            reason,
        })?;
    }
    for op in OpType::ALL {
        if !catalog.iter().any(|t| t.op_type == op) {
            return Err(TemplateError::MissingType(op));
        }
    }
    Ok(catalog)
}

pub fn load_templates(path: &Path) -> Result<Vec<TemplatePair>, TemplateError> {
    let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_templates(&text)
}

pub fn default_templates() -> Vec<TemplatePair> {
    parse_templates(DEFAULT_CATALOG).expect("shipped catalog is valid")
}
