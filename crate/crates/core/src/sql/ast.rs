use std::fmt;

use crate::text::{render_exact, Decimal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregate {
    Max,
    Min,
    Sum,
    Avg,
    CountDistinct,
}

impl Aggregate {
    /// Aggregates that need a numeric column.
    pub fn is_numeric(self) -> bool {
        !matches!(self, Aggregate::CountDistinct)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    Column(String),
    Aggregate(Aggregate, String),
}

impl Projection {
    pub fn column(&self) -> &str {
        match self {
            Projection::Column(c) | Projection::Aggregate(_, c) => c,
        }
    }

    pub fn aggregate(&self) -> Option<Aggregate> {
        match self {
            Projection::Column(_) => None,
            Projection::Aggregate(a, _) => Some(*a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Lt,
    Gt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Number(Decimal),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Literal(Literal),
    Subquery(Box<QueryPlan>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub column: String,
    pub op: CompareOp,
    pub operand: Operand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderBy {
    pub column: String,
    pub direction: Direction,
}

/// Parsed query. Column names are stored normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPlan {
    pub projection: Projection,
    pub predicate: Option<Predicate>,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
    pub distinct: bool,
}

impl QueryPlan {
    pub fn select(projection: Projection) -> Self {
        QueryPlan {
            projection,
            predicate: None,
            order_by: None,
            limit: None,
            distinct: false,
        }
    }

    pub fn subquery(&self) -> Option<&QueryPlan> {
        match &self.predicate {
            Some(Predicate {
                operand: Operand::Subquery(q),
                ..
            }) => Some(q),
            _ => None,
        }
    }

    /// 0 for a flat query, 1 with a scalar subquery, and so on.
    pub fn depth(&self) -> usize {
        self.subquery().map_or(0, |q| 1 + q.depth())
    }
}

pub(crate) const KEYWORDS: [&str; 18] = [
    "select", "distinct", "from", "where", "order", "by", "asc", "desc", "limit", "max", "min",
    "sum", "avg", "count", "t", "and", "or", "not",
];

fn is_bare_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
}

/// Writes a column name, quoting it unless it is a plain non-keyword word.
pub fn quote_identifier(name: &str) -> String {
    if is_bare_identifier(name) {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

pub fn quote_text(value: &str) -> String {
    format!("'{}'", value.replace('\'', "''"))
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => match render_exact(n) {
                Some(s) => f.write_str(&s),
                // non-terminating values never come out of the parser
                None => write!(f, "{n}"),
            },
            Literal::Text(s) => f.write_str(&quote_text(s)),
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projection::Column(c) => f.write_str(&quote_identifier(c)),
            Projection::Aggregate(Aggregate::CountDistinct, c) => {
                write!(f, "COUNT( DISTINCT {} )", quote_identifier(c))
            }
            Projection::Aggregate(a, c) => {
                let name = match a {
                    Aggregate::Max => "MAX",
                    Aggregate::Min => "MIN",
                    Aggregate::Sum => "SUM",
                    Aggregate::Avg => "AVG",
                    Aggregate::CountDistinct => unreachable!(),
                };
                write!(f, "{name}({})", quote_identifier(c))
            }
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompareOp::Eq => "=",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
        })
    }
}

/// Canonical text, e.g.
/// `SELECT team FROM T WHERE score < ( SELECT MAX(score) FROM T ) ORDER BY score DESC LIMIT 1`.
impl fmt::Display for QueryPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        write!(f, "{} FROM T", self.projection)?;
        if let Some(p) = &self.predicate {
            write!(f, " WHERE {} {} ", quote_identifier(&p.column), p.op)?;
            match &p.operand {
                Operand::Literal(l) => write!(f, "{l}")?,
                Operand::Subquery(q) => write!(f, "( {q} )")?,
            }
        }
        if let Some(o) = &self.order_by {
            let dir = match o.direction {
                Direction::Asc => "ASC",
                Direction::Desc => "DESC",
            };
            write!(f, " ORDER BY {} {dir}", quote_identifier(&o.column))?;
        }
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}
