//! The query subset used by SQL templates: parser, evaluator, and an
//! independent brute-force oracle for equivalence testing.

mod ast;
mod eval;
pub mod oracle;
mod parser;
pub mod random;
mod view;

pub use ast::{
    quote_identifier, quote_text, Aggregate, CompareOp, Direction, Literal, Operand, OrderBy,
    Predicate, Projection, QueryPlan,
};
pub use eval::{evaluate, evaluate_traced, evaluate_view, Trace};
pub use oracle::oracle_evaluate;
pub use parser::{parse_query, ParseError};
pub use view::TableView;

use crate::text::{render_exact, render_rounded, Decimal};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Text(String),
    Number(Decimal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultKind {
    CellSet,
    AggregateScalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub values: Vec<Scalar>,
    pub kind: ResultKind,
}

impl QueryResult {
    pub fn scalar(value: Scalar) -> Self {
        QueryResult {
            values: vec![value],
            kind: ResultKind::AggregateScalar,
        }
    }

    /// Renders the result as answer text. MAX/MIN/COUNT select existing
    /// values and print exactly; SUM/AVG are computed and use the rounding
    /// rule. Multiple cells are joined with `", "`.
    pub fn render(&self, projection: &Projection) -> String {
        let rounded = matches!(
            projection.aggregate(),
            Some(Aggregate::Sum | Aggregate::Avg)
        );
        self.values
            .iter()
            .map(|v| match v {
                Scalar::Text(s) => s.clone(),
                Scalar::Number(n) if rounded => render_rounded(n),
                Scalar::Number(n) => render_exact(n).unwrap_or_else(|| render_rounded(n)),
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SqlError {
    #[error("unknown column {0:?}")]
    MissingColumn(String),
    #[error("column {0:?} is not numeric")]
    TypeMismatch(String),
    #[error("cell in column {column:?}, row {row} is not numeric")]
    NotNumeric { column: String, row: usize },
    #[error("literal {0:?} is not numeric")]
    NotNumericLiteral(String),
    #[error("aggregate over zero rows")]
    EmptyAggregate,
    #[error("subquery returned {0} values, expected exactly one")]
    SubqueryNotScalar(usize),
}
