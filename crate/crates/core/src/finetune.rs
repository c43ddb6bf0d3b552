//! Fine-tuning preprocessing: select-then-rank table reconstruction and
//! trigger-word splitting of evaluation statements.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::cloze::linearize;
use crate::table::Table;
use crate::template::OpType;
use crate::text::{content_tokens, tokenize};

pub const DEFAULT_TRIGGERS: &str = include_str!("../assets/triggers.json");

/// Default cell budget for a prepared table.
pub const DEFAULT_BUDGET: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailed,
    Refuted,
    /// Any other label (for example a three-way "unknown"), passed through.
    Unknown,
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        Ok(match &v {
            serde_json::Value::Number(n) if n.as_i64() == Some(1) => Label::Entailed,
            serde_json::Value::Number(n) if n.as_i64() == Some(0) => Label::Refuted,
            serde_json::Value::Bool(b) => {
                if *b {
                    Label::Entailed
                } else {
                    Label::Refuted
                }
            }
            serde_json::Value::String(s) => match s.to_lowercase().as_str() {
                "1" | "entailed" | "entailment" | "true" => Label::Entailed,
                "0" | "refuted" | "false" => Label::Refuted,
                _ => Label::Unknown,
            },
            _ => Label::Unknown,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub id: String,
    #[serde(rename = "statement")]
    pub text: String,
    #[serde(default)]
    pub label: Option<Label>,
    pub table_id: String,
}

impl Statement {
    pub fn new(id: &str, text: &str, table_id: &str) -> Self {
        Statement {
            id: id.into(),
            text: text.into(),
            label: None,
            table_id: table_id.into(),
        }
    }
}

/// Keeps the columns whose header or some cell shares a non-stopword token
/// with the statement. Keeps every column when none qualifies.
pub fn select_columns(statement: &Statement, table: &Table) -> Table {
    let s = content_tokens(&statement.text);
    let linked = |c: usize| {
        let hit = |text: &str| content_tokens(text).iter().any(|t| s.contains(t));
        hit(&table.headers[c]) || table.rows.iter().any(|r| hit(&r[c]))
    };
    let keep: Vec<usize> = (0..table.num_columns()).filter(|&c| linked(c)).collect();
    if keep.is_empty() || keep.len() == table.num_columns() {
        return table.clone();
    }
    Table {
        id: table.id.clone(),
        title: table.title.clone(),
        headers: keep.iter().map(|&c| table.headers[c].clone()).collect(),
        rows: table
            .rows
            .iter()
            .map(|r| keep.iter().map(|&c| r[c].clone()).collect())
            .collect(),
        column_kinds: keep
            .iter()
            .filter_map(|&c| table.column_kinds.get(c).copied())
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedTable {
    pub base: Table,
    /// Row indices of `base`, most relevant first.
    pub row_order: Vec<usize>,
    /// Relevance of each row in `row_order` order.
    pub row_scores: Vec<usize>,
}

impl RankedTable {
    /// The base table with rows reordered.
    pub fn reordered(&self) -> Table {
        Table {
            rows: self
                .row_order
                .iter()
                .map(|&r| self.base.rows[r].clone())
                .collect(),
            ..self.base.clone()
        }
    }
}

/// Relevance of one row: distinct non-stopword tokens shared with the statement.
pub fn row_score(statement_tokens: &HashSet<String>, row: &[String]) -> usize {
    content_tokens(&row.join(" "))
        .intersection(statement_tokens)
        .count()
}

/// Orders rows by descending relevance; equal scores keep table order.
pub fn rank_rows(statement: &Statement, table: &Table) -> RankedTable {
    let s = content_tokens(&statement.text);
    let scores: Vec<usize> = table.rows.iter().map(|r| row_score(&s, r)).collect();
    let mut order: Vec<usize> = (0..table.num_rows()).collect();
    order.sort_by(|a, b| scores[*b].cmp(&scores[*a]));
    RankedTable {
        base: table.clone(),
        row_scores: order.iter().map(|&r| scores[r]).collect(),
        row_order: order,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepOptions {
    /// Cell budget; the table keeps `budget / columns` rows.
    pub budget: usize,
    pub select_columns: bool,
    pub rank_rows: bool,
}

impl Default for PrepOptions {
    fn default() -> Self {
        PrepOptions {
            budget: DEFAULT_BUDGET,
            select_columns: true,
            rank_rows: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedRecord {
    pub id: String,
    pub statement: String,
    pub label: Option<Label>,
    pub linearized_table: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PrepError {
    #[error("budget too small: {budget} cells for {columns} columns")]
    BudgetTooSmall { budget: usize, columns: usize },
}

/// Select columns, rank rows, truncate to the cell budget, linearize.
pub fn prepare_pair(
    statement: &Statement,
    table: &Table,
    options: PrepOptions,
) -> Result<PreparedRecord, PrepError> {
    let selected = if options.select_columns {
        select_columns(statement, table)
    } else {
        table.clone()
    };
    let m = selected.num_columns();
    if options.budget < m {
        return Err(PrepError::BudgetTooSmall {
            budget: options.budget,
            columns: m,
        });
    }
    let mut ordered = if options.rank_rows {
        rank_rows(statement, &selected).reordered()
    } else {
        selected
    };
    ordered.rows.truncate(options.budget / m.max(1));
    Ok(PreparedRecord {
        id: statement.id.clone(),
        statement: statement.text.clone(),
        label: statement.label,
        linearized_table: linearize(&ordered),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerCatalog {
    /// Highest priority first.
    pub priority: Vec<OpType>,
    pub triggers: BTreeMap<OpType, Vec<String>>,
}

#[derive(Debug, thiserror::Error)]
pub enum TriggerError {
    #[error("cannot read trigger catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trigger catalog does not parse: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid trigger catalog: {0}")]
    Invalid(String),
}

impl TriggerCatalog {
    pub fn from_json(json: &str) -> Result<Self, TriggerError> {
        let cat: TriggerCatalog = serde_json::from_str(json)?;
        cat.validate().map_err(TriggerError::Invalid)?;
        Ok(cat)
    }

    pub fn load(path: &Path) -> Result<Self, TriggerError> {
        let text = std::fs::read_to_string(path).map_err(|source| TriggerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), String> {
        for op in OpType::ALL {
            if self.triggers.get(&op).is_none_or(|w| w.is_empty()) {
                return Err(format!("no trigger words for {op}"));
            }
        }
        let mut p = self.priority.clone();
        p.sort();
        p.dedup();
        if p.len() != 6 || p.len() != self.priority.len() {
            return Err("priority must list each operation type exactly once".into());
        }
        Ok(())
    }

    /// The highest-priority type with a trigger among the statement's tokens.
    pub fn classify(&self, text: &str) -> Option<OpType> {
        let tokens: HashSet<String> = tokenize(text).into_iter().collect();
        self.priority
            .iter()
            .copied()
            .find(|op| self.triggers[op].iter().any(|w| tokens.contains(w)))
    }
}

impl Default for TriggerCatalog {
    fn default() -> Self {
        TriggerCatalog::from_json(DEFAULT_TRIGGERS).expect("shipped trigger catalog is valid")
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("duplicate statement id {0:?}")]
    DuplicateId(String),
    #[error("not enough statements: {}", .0.iter().map(|(op, have)| format!("{op} has {have}")).collect::<Vec<_>>().join(", "))]
    Shortfall(Vec<(OpType, usize)>),
}

/// Classifies statements and samples exactly `per_type` of each type.
/// Each statement has one type, so the sets are disjoint. Output sets are
/// sorted by id.
pub fn split_by_trigger(
    statements: &[Statement],
    catalog: &TriggerCatalog,
    per_type: usize,
    seed: u64,
) -> Result<BTreeMap<OpType, Vec<Statement>>, SplitError> {
    let mut ids = HashSet::new();
    let mut groups: BTreeMap<OpType, Vec<&Statement>> =
        OpType::ALL.iter().map(|&op| (op, Vec::new())).collect();
    for s in statements {
        if !ids.insert(s.id.as_str()) {
            return Err(SplitError::DuplicateId(s.id.clone()));
        }
        if let Some(op) = catalog.classify(&s.text) {
            groups.get_mut(&op).unwrap().push(s);
        }
    }
    let short: Vec<(OpType, usize)> = OpType::ALL
        .iter()
        .map(|op| (*op, groups[op].len()))
        .filter(|(_, n)| *n < per_type)
        .collect();
    if !short.is_empty() {
        return Err(SplitError::Shortfall(short));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeMap::new();
    for op in OpType::ALL {
        let mut group = groups.remove(&op).unwrap();
        group.sort_by(|a, b| a.id.cmp(&b.id));
        let mut picked: Vec<Statement> = index::sample(&mut rng, group.len(), per_type)
            .into_iter()
            .map(|i| group[i].clone())
            .collect();
        picked.sort_by(|a, b| a.id.cmp(&b.id));
        out.insert(op, picked);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(headers: &[&str], rows: &[&[&str]]) -> Table {
        Table::new(
            "t",
            headers.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    fn hotels() -> Table {
        t(
            &["hotel", "floors", "year"],
            &[
                &["las vegas hilton", "30", "1969"],
                &["palazzo", "53", "2007"],
                &["wynn", "45", "2005"],
            ],
        )
    }

    #[test]
    fn select_linked_columns() {
        let s = Statement::new(
            "1",
            "the palazzo has more floors than las vegas hilton",
            "t",
        );
        let sel = select_columns(&s, &hotels());
        assert_eq!(sel.headers, ["hotel", "floors"]);
        assert_eq!(sel.num_rows(), 3);
        let none = Statement::new("2", "nothing matches here", "t");
        assert_eq!(select_columns(&none, &hotels()), hotels());
    }

    #[test]
    fn palazzo_row_scores_one() {
        let s = Statement::new(
            "1",
            "the palazzo has more floors than las vegas hilton",
            "t",
        );
        let table = t(&["hotel", "floors"], &[&["palazzo", "53"]]);
        assert_eq!(rank_rows(&s, &table).row_scores, [1]);
        let ranked = rank_rows(&s, &hotels());
        assert_eq!(ranked.row_order, [0, 1, 2]);
        assert_eq!(ranked.row_scores, [3, 1, 0]);
    }

    #[test]
    fn all_zero_keeps_order() {
        let s = Statement::new("1", "zzz", "t");
        assert_eq!(rank_rows(&s, &hotels()).row_order, [0, 1, 2]);
    }

    #[test]
    fn budget_truncation() {
        let s = Statement::new("1", "wynn", "t");
        let opts = PrepOptions {
            budget: 3,
            select_columns: false,
            rank_rows: true,
        };
        let rec = prepare_pair(&s, &hotels(), opts).unwrap();
        assert_eq!(
            rec.linearized_table,
            "[Header] hotel | floors | year [Row] wynn | 45 | 2005"
        );
        let err = prepare_pair(&s, &hotels(), PrepOptions { budget: 2, ..opts }).unwrap_err();
        assert_eq!(err.to_string(), "budget too small: 2 cells for 3 columns");
    }

    #[test]
    fn labels_accept_ints_and_strings() {
        let parse = |j: &str| serde_json::from_str::<Statement>(j).unwrap().label;
        assert_eq!(
            parse(r#"{"id":"a","statement":"x","label":1,"table_id":"t"}"#),
            Some(Label::Entailed)
        );
        assert_eq!(
            parse(r#"{"id":"a","statement":"x","label":"refuted","table_id":"t"}"#),
            Some(Label::Refuted)
        );
        assert_eq!(
            parse(r#"{"id":"a","statement":"x","label":"unknown","table_id":"t"}"#),
            Some(Label::Unknown)
        );
        assert_eq!(parse(r#"{"id":"a","statement":"x","table_id":"t"}"#), None);
    }

    #[test]
    fn published_examples_classify() {
        let cat = TriggerCatalog::default();
        let cases = [
            (
                "the blues and penguins game on march 20 , score was 2 - 4",
                OpType::Filter,
            ),
            (
                "pacific national has the highest number in class",
                OpType::Superlative,
            ),
            (
                "the average amount of points among all teams is 29",
                OpType::Aggregation,
            ),
            (
                "ian woosnam placed higher than craig parry",
                OpType::Comparative,
            ),
            (
                "the second largest number of runs was 8529",
                OpType::Ordinal,
            ),
            (
                "there are 5 different nations in the tournament",
                OpType::Unique,
            ),
        ];
        for (text, op) in cases {
            assert_eq!(cat.classify(text), Some(op), "{text}");
        }
        assert_eq!(cat.classify("no trigger here"), None);
    }

    #[test]
    fn split_errors() {
        let cat = TriggerCatalog::default();
        let s = vec![
            Statement::new("1", "x is 1", "t"),
            Statement::new("1", "y is 2", "t"),
        ];
        assert_eq!(
            split_by_trigger(&s, &cat, 1, 0),
            Err(SplitError::DuplicateId("1".into()))
        );
        let s = vec![Statement::new("1", "x is 1", "t")];
        let err = split_by_trigger(&s, &cat, 1, 0).unwrap_err();
        assert!(err.to_string().contains("superlative has 0"), "{err}");
    }
}
