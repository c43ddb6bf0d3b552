use std::cmp::Ordering;
use std::collections::HashSet;

use num_rational::BigRational;
use num_traits::Zero;

use super::ast::*;
use super::{QueryResult, ResultKind, Scalar, SqlError, TableView};
use crate::table::{ColumnKind, Table};
use crate::text::{normalize, parse_number, render_exact, Decimal};

/// Intermediate facts about one evaluation, used by the template engine's
/// validity rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    /// Rows satisfying the predicate, after ORDER BY, before DISTINCT/LIMIT.
    pub ordered_rows: Vec<usize>,
    /// Value of the scalar subquery, when there is one.
    pub subquery_value: Option<Scalar>,
}

pub fn evaluate(plan: &QueryPlan, table: &Table) -> Result<QueryResult, SqlError> {
    evaluate_traced(plan, table).map(|(r, _)| r)
}

fn resolve(table: &TableView<'_>, name: &str) -> Result<usize, SqlError> {
    table
        .column_index(name)
        .ok_or_else(|| SqlError::MissingColumn(name.to_string()))
}

fn numeric_cell<'t>(
    table: &'t TableView<'_>,
    row: usize,
    col: usize,
) -> Result<&'t Decimal, SqlError> {
    table.number(row, col).ok_or_else(|| SqlError::NotNumeric {
        column: table.header(col).to_string(),
        row,
    })
}

enum Matcher {
    All,
    Numeric {
        col: usize,
        op: CompareOp,
        value: Decimal,
    },
    TextEq {
        col: usize,
        value: String,
    },
}

fn operand_value(
    operand: &Operand,
    table: &TableView<'_>,
) -> Result<(Scalar, Option<Scalar>), SqlError> {
    match operand {
        Operand::Literal(Literal::Number(n)) => Ok((Scalar::Number(n.clone()), None)),
        Operand::Literal(Literal::Text(s)) => Ok((Scalar::Text(s.clone()), None)),
        Operand::Subquery(q) => {
            let (result, _) = evaluate_view(q, table)?;
            if result.values.len() != 1 {
                return Err(SqlError::SubqueryNotScalar(result.values.len()));
            }
            let v = result.values.into_iter().next().unwrap();
            Ok((v.clone(), Some(v)))
        }
    }
}

pub fn evaluate_traced(plan: &QueryPlan, table: &Table) -> Result<(QueryResult, Trace), SqlError> {
    evaluate_view(plan, &TableView::new(table))
}

/// As [`evaluate_traced`] over a prepared view.
pub fn evaluate_view(
    plan: &QueryPlan,
    table: &TableView<'_>,
) -> Result<(QueryResult, Trace), SqlError> {
    let proj_col = resolve(table, plan.projection.column())?;
    let pred_col = plan
        .predicate
        .as_ref()
        .map(|p| resolve(table, &p.column))
        .transpose()?;
    let order_col = plan
        .order_by
        .as_ref()
        .map(|o| resolve(table, &o.column))
        .transpose()?;

    if let Some(agg) = plan.projection.aggregate() {
        if agg.is_numeric() && table.kind(proj_col) != ColumnKind::Numeric {
            return Err(SqlError::TypeMismatch(plan.projection.column().to_string()));
        }
    }
    let mut trace = Trace::default();
    let matcher = match (&plan.predicate, pred_col) {
        (Some(p), Some(col)) => {
            let numeric = table.kind(col) == ColumnKind::Numeric;
            if !numeric && p.op != CompareOp::Eq {
                return Err(SqlError::TypeMismatch(p.column.clone()));
            }
            let (value, sub) = operand_value(&p.operand, table)?;
            trace.subquery_value = sub;
            if numeric {
                let value = match value {
                    Scalar::Number(n) => n,
                    Scalar::Text(s) => parse_number(&s).ok_or(SqlError::NotNumericLiteral(s))?,
                };
                Matcher::Numeric {
                    col,
                    op: p.op,
                    value,
                }
            } else {
                let value = match value {
                    Scalar::Text(s) => normalize(&s),
                    Scalar::Number(n) => render_exact(&n).unwrap_or_default(),
                };
                Matcher::TextEq { col, value }
            }
        }
        _ => Matcher::All,
    };

    let mut rows = Vec::new();
    for r in 0..table.num_rows() {
        let keep = match &matcher {
            Matcher::All => true,
            Matcher::TextEq { col, value } => table.cell(r, *col) == *value,
            Matcher::Numeric { col, op, value } => {
                let cell = numeric_cell(table, r, *col)?;
                match op {
                    CompareOp::Eq => cell == value,
                    CompareOp::Lt => cell < value,
                    CompareOp::Gt => cell > value,
                }
            }
        };
        if keep {
            rows.push(r);
        }
    }

    if let (Some(order), Some(col)) = (&plan.order_by, order_col) {
        if table.kind(col) == ColumnKind::Numeric {
            let mut keyed = Vec::with_capacity(rows.len());
            for &r in &rows {
                keyed.push((numeric_cell(table, r, col)?, r));
            }
            sort_stable(&mut keyed, order.direction);
            rows = keyed.into_iter().map(|(_, r)| r).collect();
        } else {
            let mut keyed: Vec<(&str, usize)> =
                rows.iter().map(|&r| (table.cell(r, col), r)).collect();
            sort_stable(&mut keyed, order.direction);
            rows = keyed.into_iter().map(|(_, r)| r).collect();
        }
    }
    trace.ordered_rows = rows;
    let rows = &trace.ordered_rows;

    let result = match plan.projection.aggregate() {
        Some(Aggregate::CountDistinct) => {
            let distinct: HashSet<&str> = rows
                .iter()
                .map(|&r| table.cell(r, proj_col))
                .filter(|c| !c.is_empty())
                .collect();
            QueryResult::scalar(Scalar::Number(BigRational::from_integer(
                distinct.len().into(),
            )))
        }
        Some(agg) => {
            let mut values = Vec::with_capacity(rows.len());
            for &r in rows {
                values.push(numeric_cell(table, r, proj_col)?);
            }
            if values.is_empty() {
                return Err(SqlError::EmptyAggregate);
            }
            let v = match agg {
                Aggregate::Max => values.into_iter().max().unwrap().clone(),
                Aggregate::Min => values.into_iter().min().unwrap().clone(),
                Aggregate::Sum => values.into_iter().fold(Decimal::zero(), |a, b| a + b),
                Aggregate::Avg => {
                    let count = values.len();
                    values.into_iter().fold(Decimal::zero(), |a, b| a + b)
                        / BigRational::from_integer(count.into())
                }
                Aggregate::CountDistinct => unreachable!(),
            };
            QueryResult::scalar(Scalar::Number(v))
        }
        None => {
            let mut out: Vec<String> = Vec::new();
            let mut seen = HashSet::new();
            for &r in rows {
                let cell = table.cell(r, proj_col);
                if plan.distinct && !seen.insert(cell) {
                    continue;
                }
                out.push(cell.to_string());
            }
            if let Some(limit) = plan.limit {
                out.truncate(limit as usize);
            }
            QueryResult {
                values: out.into_iter().map(Scalar::Text).collect(),
                kind: ResultKind::CellSet,
            }
        }
    };
    Ok((result, trace))
}

fn sort_stable<K: Ord>(keyed: &mut [(K, usize)], direction: Direction) {
    keyed.sort_by(|a, b| {
        let ord: Ordering = a.0.cmp(&b.0);
        match direction {
            Direction::Asc => ord,
            Direction::Desc => ord.reverse(),
        }
    });
}
