//! Brute-force reference evaluator.
//!
//! Shares only the AST and the [`Table`] container with the main evaluator.
//! Number parsing, text normalization, ordering and aggregation are all
//! re-derived here by direct enumeration so the two can be checked against
//! each other.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use unicode_normalization::UnicodeNormalization;

use super::ast::*;
use super::{QueryResult, ResultKind, Scalar, SqlError};
use crate::table::{ColumnKind, Table};

type Num = BigRational;

fn norm(s: &str) -> String {
    let mut out = String::new();
    let mut pending_space = false;
    let lowered = s.nfc().collect::<String>().to_lowercase();
    for c in lowered.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}

fn number(raw: &str) -> Option<Num> {
    let mut chars: Vec<char> = raw.trim().chars().collect();
    let mut negative = false;
    let mut take_sign = |chars: &mut Vec<char>| -> bool {
        match chars.first() {
            Some('-') | Some('\u{2212}') => {
                chars.remove(0);
                negative = true;
                true
            }
            Some('+') => {
                chars.remove(0);
                true
            }
            _ => false,
        }
    };
    let signed = take_sign(&mut chars);
    if matches!(chars.first(), Some('$' | '€' | '£')) {
        chars.remove(0);
        if !signed {
            take_sign(&mut chars);
        }
    }
    if chars.last() == Some(&'%') {
        chars.pop();
    }
    let text: String = chars.into_iter().collect();
    let mut numer = BigInt::zero();
    let mut denom = BigInt::from(1);
    let mut seen_point = false;
    let mut digits = 0;
    for c in text.trim().chars() {
        match c {
            ',' => {}
            '.' if !seen_point => seen_point = true,
            d if d.is_ascii_digit() => {
                numer = numer * 10 + BigInt::from(d as u32 - '0' as u32);
                if seen_point {
                    denom *= 10;
                }
                digits += 1;
            }
            _ => return None,
        }
    }
    if digits == 0 {
        return None;
    }
    let v = BigRational::new(numer, denom);
    Some(if negative { -v } else { v })
}

/// Decimal expansion by long division; empty when it does not terminate
/// within 64 places.
fn decimal_text(v: &Num) -> String {
    let negative = v.is_negative();
    let n = v.numer().abs();
    let d = v.denom().clone();
    let int = &n / &d;
    let mut rem = &n % &d;
    let mut frac = String::new();
    while !rem.is_zero() {
        if frac.len() > 64 {
            return String::new();
        }
        rem *= 10;
        frac.push_str(&(&rem / &d).to_string());
        rem = &rem % &d;
    }
    let body = if frac.is_empty() {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn find(table: &Table, name: &str) -> Result<usize, SqlError> {
    for (i, h) in table.headers.iter().enumerate() {
        if norm(h) == name {
            return Ok(i);
        }
    }
    Err(SqlError::MissingColumn(name.to_string()))
}

fn is_numeric(table: &Table, col: usize) -> bool {
    table.column_kinds.get(col) == Some(&ColumnKind::Numeric)
}

fn cell_number(table: &Table, row: usize, col: usize) -> Result<Num, SqlError> {
    number(&table.rows[row][col]).ok_or(SqlError::NotNumeric {
        column: norm(&table.headers[col]),
        row,
    })
}

/// Evaluates `plan` by full enumeration.
pub fn oracle_evaluate(plan: &QueryPlan, table: &Table) -> Result<QueryResult, SqlError> {
    let proj = find(table, plan.projection.column())?;
    let pred = match &plan.predicate {
        Some(p) => Some((p, find(table, &p.column)?)),
        None => None,
    };
    let order = match &plan.order_by {
        Some(o) => Some((o.direction, find(table, &o.column)?)),
        None => None,
    };
    let agg = plan.projection.aggregate();
    if matches!(
        agg,
        Some(Aggregate::Max | Aggregate::Min | Aggregate::Sum | Aggregate::Avg)
    ) && !is_numeric(table, proj)
    {
        return Err(SqlError::TypeMismatch(plan.projection.column().to_string()));
    }

    // Row membership, one row at a time.
    let mut member = vec![true; table.rows.len()];
    if let Some((p, col)) = pred {
        let numeric = is_numeric(table, col);
        if !numeric && p.op != CompareOp::Eq {
            return Err(SqlError::TypeMismatch(p.column.clone()));
        }
        let operand = match &p.operand {
            Operand::Literal(Literal::Number(n)) => Scalar::Number(n.clone()),
            Operand::Literal(Literal::Text(s)) => Scalar::Text(s.clone()),
            Operand::Subquery(q) => {
                let sub = oracle_evaluate(q, table)?;
                if sub.values.len() != 1 {
                    return Err(SqlError::SubqueryNotScalar(sub.values.len()));
                }
                sub.values[0].clone()
            }
        };
        if numeric {
            let target = match operand {
                Scalar::Number(n) => n,
                Scalar::Text(s) => number(&s).ok_or(SqlError::NotNumericLiteral(s))?,
            };
            for (row, keep) in member.iter_mut().enumerate() {
                let v = cell_number(table, row, col)?;
                *keep = match p.op {
                    CompareOp::Eq => v == target,
                    CompareOp::Lt => v < target,
                    CompareOp::Gt => v > target,
                };
            }
        } else {
            let target = match operand {
                Scalar::Text(s) => norm(&s),
                Scalar::Number(n) => decimal_text(&n),
            };
            for (row, keep) in member.iter_mut().enumerate() {
                *keep = norm(&table.rows[row][col]) == target;
            }
        }
    }
    let matched: Vec<usize> = (0..table.rows.len()).filter(|&r| member[r]).collect();

    // Selection-order enumeration: repeatedly take the best remaining row,
    // earliest index winning ties.
    let sequence: Vec<usize> = match order {
        None => matched.clone(),
        Some((direction, col)) => {
            let numeric = is_numeric(table, col);
            let mut nums = Vec::new();
            if numeric {
                for &r in &matched {
                    nums.push(cell_number(table, r, col)?);
                }
            }
            let texts: Vec<String> = matched.iter().map(|&r| norm(&table.rows[r][col])).collect();
            let better = |a: usize, b: usize| -> bool {
                let ord = if numeric {
                    nums[a].cmp(&nums[b])
                } else {
                    texts[a].cmp(&texts[b])
                };
                match direction {
                    Direction::Asc => ord.is_lt(),
                    Direction::Desc => ord.is_gt(),
                }
            };
            let mut taken = vec![false; matched.len()];
            let mut seq = Vec::new();
            for _ in 0..matched.len() {
                let mut best: Option<usize> = None;
                for (i, &done) in taken.iter().enumerate() {
                    if done {
                        continue;
                    }
                    if best.is_none_or(|b| better(i, b)) {
                        best = Some(i);
                    }
                }
                let b = best.unwrap();
                taken[b] = true;
                seq.push(matched[b]);
            }
            seq
        }
    };

    match agg {
        Some(Aggregate::CountDistinct) => {
            let mut distinct: Vec<String> = Vec::new();
            for &r in &sequence {
                let c = norm(&table.rows[r][proj]);
                if !c.is_empty() && !distinct.contains(&c) {
                    distinct.push(c);
                }
            }
            Ok(QueryResult::scalar(Scalar::Number(
                BigRational::from_integer(BigInt::from(distinct.len())),
            )))
        }
        Some(a) => {
            let mut values = Vec::new();
            for &r in &sequence {
                values.push(cell_number(table, r, proj)?);
            }
            let Some(first) = values.first().cloned() else {
                return Err(SqlError::EmptyAggregate);
            };
            let mut acc = first.clone();
            let mut total = Num::zero();
            for v in &values {
                total += v;
                match a {
                    Aggregate::Max if *v > acc => acc = v.clone(),
                    Aggregate::Min if *v < acc => acc = v.clone(),
                    _ => {}
                }
            }
            let value = match a {
                Aggregate::Max | Aggregate::Min => acc,
                Aggregate::Sum => total,
                Aggregate::Avg => total / BigRational::from_integer(BigInt::from(values.len())),
                Aggregate::CountDistinct => unreachable!(),
            };
            Ok(QueryResult::scalar(Scalar::Number(value)))
        }
        None => {
            let mut out: Vec<String> = Vec::new();
            for &r in &sequence {
                if plan.limit.is_some_and(|l| out.len() as u64 >= l) {
                    break;
                }
                let c = norm(&table.rows[r][proj]);
                if plan.distinct && out.contains(&c) {
                    continue;
                }
                out.push(c);
            }
            Ok(QueryResult {
                values: out.into_iter().map(Scalar::Text).collect(),
                kind: ResultKind::CellSet,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn own_number_rule() {
        for (raw, expect) in [
            ("1,234", "1234"),
            ("$3.50", "3.5"),
            ("-€2", "-2"),
            ("12%", "12"),
            (".25", "0.25"),
        ] {
            assert_eq!(decimal_text(&number(raw).unwrap()), expect);
        }
        for bad in ["", "abc", "1.2.3", "1e3", "--1"] {
            assert!(number(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn own_normalizer() {
        assert_eq!(norm("  A  b\tC "), "a b c");
    }
}
