use std::collections::{BTreeMap, HashSet};
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{segments, word_occurrences, OpType, Segment, SlotConstraint, SlotKind, TemplatePair};
use crate::sql::{
    evaluate_view, parse_query, quote_identifier, quote_text, Aggregate, Literal, Operand,
    QueryPlan, QueryResult, Scalar, SqlError, TableView, Trace,
};
use crate::table::{ColumnKind, Table};
use crate::text::parse_number;

/// Column assignments tried per template and table.
const MAX_ASSIGNMENTS: usize = 32;
/// Distinct cell values tried per value slot and column assignment.
const MAX_VALUES: usize = 64;

/// A template with every slot bound but `[ANS]` still open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingInstantiation {
    pub template: TemplatePair,
    /// Placeholder name (`Column1`, `Value2`) to normalized header or cell.
    pub bindings: BTreeMap<String, String>,
    /// The SQL template with bindings substituted.
    pub sql: String,
}

/// A fully rendered, verified sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instantiation {
    pub template: TemplatePair,
    pub bindings: BTreeMap<String, String>,
    pub sql: String,
    pub answer: String,
    pub sentence: String,
    /// Byte range of the answer in `sentence`.
    pub answer_span: Range<usize>,
    /// Byte range of the context-sensitive word, if the template has one.
    pub sensitive_span: Option<Range<usize>>,
    /// Byte range of the mask word when the mask target is a literal word.
    pub mask_word_span: Option<Range<usize>>,
}

impl Instantiation {
    pub fn op_type(&self) -> OpType {
        self.template.op_type
    }

    /// Byte range the cloze task hides.
    pub fn mask_span(&self) -> Range<usize> {
        self.mask_word_span
            .clone()
            .unwrap_or_else(|| self.answer_span.clone())
    }

    /// Re-executes the bound SQL and checks it reproduces the answer.
    pub fn verify(&self, table: &Table) -> bool {
        self.verify_view(&TableView::new(table))
    }

    /// As [`Instantiation::verify`] over a prepared view.
    pub fn verify_view(&self, table: &TableView<'_>) -> bool {
        let Ok(plan) = parse_query(&self.sql) else {
            return false;
        };
        evaluate_view(&plan, table).is_ok_and(|(r, _)| r.render(&plan.projection) == self.answer)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FillError {
    #[error("bound sql does not parse: {0}")]
    Parse(#[from] crate::sql::ParseError),
    #[error(transparent)]
    Eval(#[from] SqlError),
    #[error("query returned no answer")]
    EmptyAnswer,
}

/// Executes the bound SQL and renders the sentence around its answer.
pub fn fill_answer(
    pending: PendingInstantiation,
    table: &Table,
) -> Result<Instantiation, FillError> {
    execute(pending, &TableView::new(table)).map(|(inst, ..)| inst)
}

fn execute(
    pending: PendingInstantiation,
    table: &TableView<'_>,
) -> Result<(Instantiation, QueryPlan, QueryResult, Trace), FillError> {
    let plan = parse_query(&pending.sql)?;
    let (result, trace) = evaluate_view(&plan, table)?;
    let answer = result.render(&plan.projection);
    if answer.is_empty() {
        return Err(FillError::EmptyAnswer);
    }
    let inst = render_sentence(pending, answer);
    Ok((inst, plan, result, trace))
}

fn render_sentence(pending: PendingInstantiation, answer: String) -> Instantiation {
    let t = &pending.template;
    let segs = segments(&t.nl).expect("validated template");
    let mut sentence = String::new();
    let mut answer_span = 0..0;
    let mut sensitive_span = None;
    let mut mask_word_span = None;
    for seg in segs {
        match seg {
            Segment::Slot("ANS") => {
                answer_span = sentence.len()..sentence.len() + answer.len();
                sentence.push_str(&answer);
            }
            Segment::Slot(name) => sentence.push_str(&pending.bindings[name]),
            Segment::Text(text) => {
                let base = sentence.len();
                let locate = |w: &str| {
                    word_occurrences(text, w)
                        .first()
                        .map(|r| base + r.start..base + r.end)
                };
                if let Some(w) = &t.sensitive_word {
                    sensitive_span = sensitive_span.or_else(|| locate(w));
                }
                if let Some(w) = t.mask_target.word() {
                    mask_word_span = mask_word_span.or_else(|| locate(w));
                }
                sentence.push_str(text);
            }
        }
    }
    Instantiation {
        template: pending.template,
        bindings: pending.bindings,
        sql: pending.sql,
        answer,
        sentence,
        answer_span,
        sensitive_span,
        mask_word_span,
    }
}

fn column_fits(table: &TableView<'_>, col: usize, kind: SlotKind) -> bool {
    match kind {
        SlotKind::Any => true,
        SlotKind::Numeric => table.kind(col) == ColumnKind::Numeric,
        SlotKind::Text => table.kind(col) == ColumnKind::Text,
        SlotKind::Entity => {
            if table.kind(col) != ColumnKind::Text {
                return false;
            }
            let mut seen = HashSet::new();
            (0..table.num_rows()).all(|r| {
                let c = table.cell(r, col);
                !c.is_empty() && seen.insert(c)
            })
        }
    }
}

/// Columns a header can be bound to: non-empty, unambiguous headers only.
fn bindable_columns(table: &TableView<'_>) -> Vec<usize> {
    let headers: Vec<&str> = (0..table.num_columns()).map(|c| table.header(c)).collect();
    (0..table.num_columns())
        .filter(|&c| {
            !headers[c].is_empty() && headers.iter().filter(|h| **h == headers[c]).count() == 1
        })
        .collect()
}

/// All injective assignments of columns to `slots`, in enumeration order.
fn assignments(candidates: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(candidates.len());
    fn walk(candidates: &[Vec<usize>], current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let depth = current.len();
        if depth == candidates.len() {
            out.push(current.clone());
            return;
        }
        for &c in &candidates[depth] {
            if !current.contains(&c) {
                current.push(c);
                walk(candidates, current, out);
                current.pop();
            }
        }
    }
    walk(candidates, &mut current, &mut out);
    out
}

/// Distinct non-empty cell values of a column in first-occurrence order;
/// for numeric columns only those that parse.
fn distinct_values(table: &TableView<'_>, col: usize) -> Vec<String> {
    let numeric = table.kind(col) == ColumnKind::Numeric;
    let mut seen = HashSet::new();
    (0..table.num_rows())
        .filter(|&r| !numeric || table.number(r, col).is_some())
        .map(|r| table.cell(r, col))
        .filter(|c| !c.is_empty() && seen.insert(*c))
        .map(str::to_string)
        .collect()
}

fn bind_sql(
    template: &TemplatePair,
    bindings: &BTreeMap<String, String>,
    table: &TableView<'_>,
) -> String {
    let segs = segments(&template.sql).expect("validated template");
    let mut sql = String::new();
    for seg in segs {
        match seg {
            Segment::Text(t) => sql.push_str(t),
            Segment::Slot(name) => {
                let value = &bindings[name];
                match &template.slot_constraints[name] {
                    SlotConstraint::Column { .. } => sql.push_str(&quote_identifier(value)),
                    SlotConstraint::Value { from } => {
                        let numeric = table
                            .column_index(&bindings[from.as_str()])
                            .is_some_and(|c| table.kind(c) == ColumnKind::Numeric);
                        match parse_number(value).filter(|_| numeric) {
                            Some(n) => sql.push_str(&Literal::Number(n).to_string()),
                            None => sql.push_str(&quote_text(value)),
                        }
                    }
                }
            }
        }
    }
    sql
}

fn number_at<'t>(
    table: &'t TableView<'_>,
    row: usize,
    col: &str,
) -> Option<&'t crate::text::Decimal> {
    table.number(row, table.column_index(col)?)
}

/// True when the first two rows of the ordered set differ on the order key.
fn strict_top(plan: &QueryPlan, trace: &Trace, table: &TableView<'_>) -> bool {
    let Some(order) = &plan.order_by else {
        return true;
    };
    match trace.ordered_rows.as_slice() {
        [] => false,
        [_] => true,
        [a, b, ..] => number_at(table, *a, &order.column) != number_at(table, *b, &order.column),
    }
}

/// The per-type rules that make the cloze answer the single correct one.
fn valid(
    template: &TemplatePair,
    plan: &QueryPlan,
    result: &QueryResult,
    trace: &Trace,
    table: &TableView<'_>,
) -> bool {
    let matched = trace.ordered_rows.len();
    match template.op_type {
        OpType::Filter | OpType::Comparative => matched == 1 && result.values.len() == 1,
        OpType::Superlative => matched >= 2 && strict_top(plan, trace, table),
        OpType::Ordinal => {
            if matched == 0 || !strict_top(plan, trace, table) {
                return false;
            }
            // The excluded extreme must itself be held by a single row, or
            // "second" would be ambiguous.
            match (&trace.subquery_value, &plan.predicate) {
                (Some(Scalar::Number(v)), Some(p)) if matches!(p.operand, Operand::Subquery(_)) => {
                    (0..table.num_rows())
                        .filter(|&r| number_at(table, r, &p.column) == Some(v))
                        .count()
                        == 1
                }
                _ => false,
            }
        }
        OpType::Aggregation => match plan.projection.aggregate() {
            Some(Aggregate::Sum | Aggregate::Avg) => matched >= 2,
            _ => matched >= 1,
        },
        OpType::Unique => table.num_rows() >= 2,
    }
}

/// Instantiates `template` against `table`, or returns `None` when no
/// binding yields a valid sentence.
pub fn instantiate<R: Rng>(
    template: &TemplatePair,
    table: &Table,
    rng: &mut R,
) -> Option<Instantiation> {
    instantiate_excluding(
        template,
        &TableView::new(table),
        rng,
        &mut HashSet::new(),
        &HashSet::new(),
    )
}

/// As [`instantiate`], skipping bindings already in `tried` (and recording
/// new ones there) and sentences already in `emitted`.
pub(crate) fn instantiate_excluding<R: Rng>(
    template: &TemplatePair,
    table: &TableView<'_>,
    rng: &mut R,
    tried: &mut HashSet<String>,
    emitted: &HashSet<String>,
) -> Option<Instantiation> {
    let column_slots: Vec<(&str, SlotKind)> = template
        .slot_constraints
        .iter()
        .filter_map(|(name, c)| match c {
            SlotConstraint::Column { kind } => Some((name.as_str(), *kind)),
            SlotConstraint::Value { .. } => None,
        })
        .collect();
    let value_slots: Vec<(&str, &str)> = template
        .slot_constraints
        .iter()
        .filter_map(|(name, c)| match c {
            SlotConstraint::Value { from } => Some((name.as_str(), from.as_str())),
            SlotConstraint::Column { .. } => None,
        })
        .collect();

    let bindable = bindable_columns(table);
    let candidates: Vec<Vec<usize>> = column_slots
        .iter()
        .map(|(_, kind)| {
            bindable
                .iter()
                .copied()
                .filter(|&c| column_fits(table, c, *kind))
                .collect()
        })
        .collect();
    let mut options = assignments(&candidates);
    options.shuffle(rng);
    options.truncate(MAX_ASSIGNMENTS);

    for assignment in options {
        let mut bindings: BTreeMap<String, String> = column_slots
            .iter()
            .zip(&assignment)
            .map(|((name, _), &col)| (name.to_string(), table.header(col).to_string()))
            .collect();
        let mut pools: Vec<Vec<String>> = value_slots
            .iter()
            .map(|(_, from)| {
                let col = assignment[column_slots
                    .iter()
                    .position(|(n, _)| n == from)
                    .expect("validated template")];
                let mut values = distinct_values(table, col);
                values.shuffle(rng);
                values.truncate(MAX_VALUES);
                values
            })
            .collect();
        if pools.iter().any(|p| p.is_empty()) {
            continue;
        }
        let rounds = if pools.is_empty() {
            1
        } else {
            pools.iter().map(Vec::len).max().unwrap()
        };
        for i in 0..rounds {
            for ((name, _), pool) in value_slots.iter().zip(pools.iter_mut()) {
                bindings.insert(name.to_string(), pool[i % pool.len()].clone());
            }
            let key = binding_key(template, &bindings);
            if !tried.insert(key) {
                continue;
            }
            let sql = bind_sql(template, &bindings, table);
            let pending = PendingInstantiation {
                template: template.clone(),
                bindings: bindings.clone(),
                sql,
            };
            let Ok((inst, plan, result, trace)) = execute(pending, table) else {
                continue;
            };
            if valid(template, &plan, &result, &trace, table) && !emitted.contains(&inst.sentence) {
                return Some(inst);
            }
        }
    }
    None
}

fn binding_key(template: &TemplatePair, bindings: &BTreeMap<String, String>) -> String {
    let mut key = template.nl.clone();
    for (k, v) in bindings {
        key.push('\u{1}');
        key.push_str(k);
        key.push('\u{2}');
        key.push_str(v);
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::default_templates;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(headers: &[&str], rows: &[&[&str]]) -> Table {
        Table::new(
            "t",
            headers.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    fn template(nl: &str) -> TemplatePair {
        default_templates()
            .into_iter()
            .find(|t| t.nl == nl)
            .unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn comparative_mentions_column_and_value() {
        let t = table(
            &["team", "score"],
            &[&["juventus", "97"], &["milan", "68"], &["roma", "50"]],
        );
        let tpl = template("[Column1] [ANS]'s [Column2] is higher than [Value2]");
        let inst = instantiate(&tpl, &t, &mut rng()).unwrap();
        assert_eq!(inst.sentence, "team juventus's score is higher than 68");
        assert_eq!(inst.answer, "juventus");
        assert_eq!(&inst.sentence[inst.mask_span()], "higher");
        assert!(inst.verify(&t));
    }

    #[test]
    fn tied_argmax_is_discarded() {
        let t = table(
            &["team", "score"],
            &[&["a", "97"], &["b", "97"], &["c", "50"]],
        );
        let tpl = template("[ANS] has the highest [Column2] of all [Column1]");
        assert!(instantiate(&tpl, &t, &mut rng()).is_none());
        let t = table(
            &["team", "score"],
            &[&["a", "97"], &["b", "98"], &["c", "50"]],
        );
        let inst = instantiate(&tpl, &t, &mut rng()).unwrap();
        assert_eq!(inst.sentence, "b has the highest score of all team");
        assert_eq!(
            &inst.sentence[inst.sensitive_span.clone().unwrap()],
            "highest"
        );
    }

    #[test]
    fn avg_without_matches_is_discarded() {
        let t = table(&["nation", "gold"], &[&["italy", "3"], &["france", "4"]]);
        // every nation occurs once, so no WHERE clause matches two rows
        let tpl = template("the average of [Column1] when [Column2] is [Value2] is [ANS].");
        assert!(instantiate(&tpl, &t, &mut rng()).is_none());
        let pending = PendingInstantiation {
            template: tpl.clone(),
            bindings: [
                ("Column1", "gold"),
                ("Column2", "nation"),
                ("Value2", "spain"),
            ]
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .into(),
            sql: "SELECT AVG(gold) FROM T WHERE nation = 'spain'".into(),
        };
        assert!(matches!(
            fill_answer(pending, &t),
            Err(FillError::Eval(SqlError::EmptyAggregate))
        ));
    }

    #[test]
    fn fill_answer_renders() {
        let t = table(
            &["name", "capacity", "v"],
            &[&["x", "114", "134"], &["y", "20", "135.4"]],
        );
        let filter = template("[Value2]'s [Column1] is [ANS].");
        let pending = PendingInstantiation {
            template: filter,
            bindings: [
                ("Column1", "capacity"),
                ("Column2", "name"),
                ("Value2", "x"),
            ]
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .into(),
            sql: "SELECT capacity FROM T WHERE name = 'x'".into(),
        };
        let inst = fill_answer(pending, &t).unwrap();
        assert_eq!(inst.sentence, "x's capacity is 114.");
        assert_eq!(inst.answer_span, 16..19);
        let avg = template("the average [Column1] is [ANS].");
        let pending = PendingInstantiation {
            template: avg,
            bindings: [("Column1".to_string(), "v".to_string())].into(),
            sql: "SELECT AVG(v) FROM T".into(),
        };
        assert_eq!(fill_answer(pending, &t).unwrap().answer, "134.7");
    }

    #[test]
    fn aggregates_never_bind_text() {
        let t = table(&["name", "city"], &[&["a", "x"], &["b", "y"]]);
        for tpl in default_templates()
            .iter()
            .filter(|t| t.op_type == OpType::Aggregation)
        {
            assert!(instantiate(tpl, &t, &mut rng()).is_none(), "{}", tpl.nl);
        }
    }

    #[test]
    fn ordinal_needs_unique_extreme() {
        let tpl = template("[ANS] has the second highest [Column2]");
        let t = table(&["p", "s"], &[&["a", "9"], &["b", "9"], &["c", "5"]]);
        assert!(instantiate(&tpl, &t, &mut rng()).is_none());
        let t = table(&["p", "s"], &[&["a", "9"], &["b", "7"], &["c", "5"]]);
        assert_eq!(instantiate(&tpl, &t, &mut rng()).unwrap().answer, "b");
    }

    #[test]
    fn quoted_headers_and_values() {
        let t = table(
            &["Player Name", "Club", "Pts"],
            &[
                &["o'neil", "ny", "10"],
                &["smith", "la", "7"],
                &["lee", "ny", "3"],
            ],
        );
        let tpl = template("[ANS] has the lowest [Column2]");
        let inst = instantiate(&tpl, &t, &mut rng()).unwrap();
        assert_eq!(
            inst.sql,
            "SELECT \"player name\" FROM T ORDER BY pts ASC LIMIT 1"
        );
        let tpl = template("the [Column1] of [Value2] is [ANS].");
        let mut r = rng();
        let mut seen = HashSet::new();
        let mut found = false;
        let view = TableView::new(&t);
        while let Some(inst) =
            instantiate_excluding(&tpl, &view, &mut r, &mut seen, &HashSet::new())
        {
            assert!(inst.verify(&t));
            found |= inst.sql.contains("'o''neil'");
        }
        assert!(found);
    }
}
