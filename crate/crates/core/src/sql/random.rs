//! Random tables and template-grammar queries for oracle equivalence runs.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ast::*;
use super::{evaluate, oracle_evaluate, QueryResult, SqlError};
use crate::table::{ColumnKind, Table};

const WORDS: [&str; 8] = [
    "red",
    "blue",
    "green",
    "Red",
    "alpha beta",
    "gamma",
    "o'neil",
    "",
];

/// A table of 1..=8 rows and 1..=8 columns mixing numeric and text
/// columns. Numeric columns repeat values often and occasionally carry a
/// blank or a stray word so error paths are exercised too.
pub fn random_table<R: Rng>(rng: &mut R, id: &str) -> Table {
    let m = rng.random_range(1..=8);
    let n = rng.random_range(1..=8);
    let headers: Vec<String> = (0..m).map(|c| format!("c{c}")).collect();
    let numeric: Vec<bool> = (0..m).map(|_| rng.random_bool(0.6)).collect();
    let rows = (0..n)
        .map(|_| {
            (0..m)
                .map(|c| {
                    if numeric[c] {
                        match rng.random_range(0..40) {
                            0 => String::new(),
                            1 => "n/a".to_string(),
                            2..=5 => {
                                format!("{}.{}", rng.random_range(-3..10), rng.random_range(0..100))
                            }
                            6..=7 => format!(
                                "{},{:03}",
                                rng.random_range(1..5),
                                rng.random_range(0..1000)
                            ),
                            _ => rng.random_range(-2..6).to_string(),
                        }
                    } else {
                        WORDS.choose(rng).unwrap().to_string()
                    }
                })
                .collect()
        })
        .collect();
    Table::new(id, headers, rows)
}

fn column_of<R: Rng>(rng: &mut R, table: &Table, want: Option<ColumnKind>) -> String {
    let pool: Vec<usize> = (0..table.num_columns())
        .filter(|&c| want.is_none_or(|k| table.kind(c) == k))
        .collect();
    let col = if pool.is_empty() || rng.random_bool(0.05) {
        rng.random_range(0..table.num_columns())
    } else {
        *pool.choose(rng).unwrap()
    };
    // rarely reference a column that does not exist
    if rng.random_ratio(1, 200) {
        "missing".to_string()
    } else {
        table.header(col)
    }
}

fn literal_for<R: Rng>(rng: &mut R, table: &Table, column: &str) -> Literal {
    let col = table.column_index(column);
    let from_cell = col
        .filter(|_| rng.random_bool(0.8) && table.num_rows() > 0)
        .map(|c| {
            let r = rng.random_range(0..table.num_rows());
            table.rows[r][c].clone()
        });
    match (col.map(|c| table.kind(c)), from_cell) {
        (Some(ColumnKind::Numeric), Some(cell)) => match crate::text::parse_number(&cell) {
            Some(v) if rng.random_bool(0.7) => Literal::Number(v),
            _ => Literal::Text(cell),
        },
        (_, Some(cell)) => Literal::Text(cell),
        _ => Literal::Number(BigRational::new(
            BigInt::from(rng.random_range(-5..50)),
            BigInt::from(*[1, 2, 4, 5, 10].choose(rng).unwrap()),
        )),
    }
}

fn aggregate<R: Rng>(rng: &mut R) -> Aggregate {
    *[
        Aggregate::Max,
        Aggregate::Min,
        Aggregate::Sum,
        Aggregate::Avg,
        Aggregate::CountDistinct,
    ]
    .choose(rng)
    .unwrap()
}

fn random_plan_at<R: Rng>(rng: &mut R, table: &Table, depth: usize) -> QueryPlan {
    let use_agg = depth > 0 || rng.random_bool(0.4);
    let projection = if use_agg {
        let agg = aggregate(rng);
        let want = agg.is_numeric().then_some(ColumnKind::Numeric);
        Projection::Aggregate(agg, column_of(rng, table, want))
    } else {
        Projection::Column(column_of(rng, table, None))
    };
    let mut plan = QueryPlan::select(projection);
    if rng.random_bool(0.6) {
        let numeric_pred = rng.random_bool(0.7);
        let column = column_of(
            rng,
            table,
            Some(if numeric_pred {
                ColumnKind::Numeric
            } else {
                ColumnKind::Text
            }),
        );
        let op = if numeric_pred {
            *[CompareOp::Eq, CompareOp::Lt, CompareOp::Gt]
                .choose(rng)
                .unwrap()
        } else {
            CompareOp::Eq
        };
        let operand = if depth == 0 && numeric_pred && op != CompareOp::Eq && rng.random_bool(0.4) {
            let agg = if rng.random_bool(0.5) {
                Aggregate::Max
            } else {
                Aggregate::Min
            };
            let mut sub = QueryPlan::select(Projection::Aggregate(agg, column.clone()));
            if rng.random_bool(0.2) {
                sub = random_plan_at(rng, table, 1);
            }
            Operand::Subquery(Box::new(sub))
        } else {
            Operand::Literal(literal_for(rng, table, &column))
        };
        plan.predicate = Some(Predicate {
            column,
            op,
            operand,
        });
    }
    if !use_agg {
        if rng.random_bool(0.5) {
            let want = rng.random_bool(0.8).then_some(ColumnKind::Numeric);
            plan.order_by = Some(OrderBy {
                column: column_of(rng, table, want),
                direction: if rng.random_bool(0.5) {
                    Direction::Desc
                } else {
                    Direction::Asc
                },
            });
        }
        if rng.random_bool(0.5) {
            plan.limit = Some(rng.random_range(1..=3));
        }
        plan.distinct = rng.random_bool(0.25);
    }
    plan
}

/// A query from the template grammar, biased toward columns that exist and
/// have the right kind.
pub fn random_plan<R: Rng>(rng: &mut R, table: &Table) -> QueryPlan {
    random_plan_at(rng, table, 0)
}

/// One disagreement between the evaluator and the oracle.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub trial: usize,
    pub query: String,
    pub table: Table,
    pub evaluator: Result<QueryResult, SqlError>,
    pub oracle: Result<QueryResult, SqlError>,
}

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "trial {}: {}\n  table {:?} rows {:?}\n  evaluator: {:?}\n  oracle:    {:?}",
            self.trial,
            self.query,
            self.table.headers,
            self.table.rows,
            self.evaluator,
            self.oracle
        )
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub trials: usize,
    pub agreements: usize,
    /// Trials whose result was an evaluation error on both sides.
    pub both_errored: usize,
    pub first_counterexample: Option<Counterexample>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.agreements == self.trials
    }
}

/// Runs `trials` random instances through `evaluator` and the oracle. Each
/// plan is rendered and re-parsed first, so the parser is on the path too.
pub fn compare_with_oracle<F>(trials: usize, seed: u64, evaluator: F) -> OracleReport
where
    F: Fn(&QueryPlan, &Table) -> Result<QueryResult, SqlError>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        trials,
        agreements: 0,
        both_errored: 0,
        first_counterexample: None,
    };
    for trial in 0..trials {
        let table = random_table(&mut rng, &format!("trial-{trial}"));
        let plan = random_plan(&mut rng, &table);
        let text = plan.to_string();
        let reparsed = super::parse_query(&text).expect("rendered plans always parse");
        debug_assert_eq!(reparsed, plan);
        let got = evaluator(&reparsed, &table);
        let want = oracle_evaluate(&reparsed, &table);
        if got == want {
            report.agreements += 1;
            if got.is_err() {
                report.both_errored += 1;
            }
        } else if report.first_counterexample.is_none() {
            report.first_counterexample = Some(Counterexample {
                trial,
                query: text,
                table,
                evaluator: got,
                oracle: want,
            });
        }
    }
    report
}

/// The production evaluator against the oracle.
pub fn verify_oracle(trials: usize, seed: u64) -> OracleReport {
    compare_with_oracle(trials, seed, evaluate)
}
