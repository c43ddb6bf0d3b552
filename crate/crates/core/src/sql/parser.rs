//! Recursive-descent parser for the query subset. The grammar is written
//! out in `docs/query-grammar.md`.

use super::ast::*;
use crate::text::{normalize, parse_number};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Str(String),
    Num(String),
    LParen,
    RParen,
    Eq,
    Lt,
    Gt,
    Star,
    Minus,
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        position,
        message: message.into(),
    })
}

impl<'a> Lexer<'a> {
    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn delimited(&mut self, close: char, what: &str) -> Result<String, ParseError> {
        let start = self.pos;
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return err(start, format!("unterminated {what}")),
                Some(c) if c == close => {
                    if self.peek_char() == Some(close) {
                        self.bump();
                        out.push(close);
                    } else {
                        return Ok(out);
                    }
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        while self.peek_char().is_some_and(char::is_whitespace) {
            self.bump();
        }
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok((start, Tok::Eof));
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            '=' => {
                self.bump();
                Tok::Eq
            }
            '<' => {
                self.bump();
                Tok::Lt
            }
            '>' => {
                self.bump();
                Tok::Gt
            }
            '*' => {
                self.bump();
                Tok::Star
            }
            '-' => {
                self.bump();
                Tok::Minus
            }
            '\'' => Tok::Str(self.delimited('\'', "string literal")?),
            '"' => Tok::Quoted(self.delimited('"', "quoted identifier")?),
            '[' => {
                let end = self.src[start..]
                    .find(']')
                    .map_or(self.src.len(), |i| start + i + 1);
                return err(
                    start,
                    format!("unresolved placeholder {}", &self.src[start..end]),
                );
            }
            c if c.is_ascii_digit() || c == '.' => {
                while self
                    .peek_char()
                    .is_some_and(|c| c.is_ascii_digit() || c == '.')
                {
                    self.bump();
                }
                Tok::Num(self.src[start..self.pos].to_string())
            }
            c if c.is_alphabetic() || c == '_' => {
                while self
                    .peek_char()
                    .is_some_and(|c| c.is_alphanumeric() || c == '_')
                {
                    self.bump();
                }
                Tok::Word(self.src[start..self.pos].to_string())
            }
            other => return err(start, format!("unexpected character {other:?}")),
        };
        Ok((start, tok))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].1
    }

    fn pos(&self) -> usize {
        self.toks[self.i].0
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.i].1.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            err(self.pos(), format!("expected {}", kw.to_uppercase()))
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            err(self.pos(), format!("expected {what}"))
        }
    }

    fn column(&mut self) -> Result<String, ParseError> {
        let pos = self.pos();
        match self.advance() {
            Tok::Quoted(name) => Ok(normalize(&name)),
            Tok::Word(w) if !KEYWORDS.contains(&w.to_lowercase().as_str()) => Ok(normalize(&w)),
            Tok::Star => err(pos, "'*' is not supported; select a single column"),
            _ => err(pos, "expected column name"),
        }
    }

    fn projection(&mut self) -> Result<Projection, ParseError> {
        let agg = match self.peek() {
            Tok::Word(w) => match w.to_ascii_lowercase().as_str() {
                "max" => Some(Aggregate::Max),
                "min" => Some(Aggregate::Min),
                "sum" => Some(Aggregate::Sum),
                "avg" => Some(Aggregate::Avg),
                "count" => Some(Aggregate::CountDistinct),
                _ => None,
            },
            _ => None,
        };
        let Some(agg) = agg else {
            return Ok(Projection::Column(self.column()?));
        };
        self.advance();
        self.expect(Tok::LParen, "'('")?;
        if agg == Aggregate::CountDistinct && !self.eat_keyword("distinct") {
            return err(self.pos(), "only COUNT( DISTINCT column ) is supported");
        }
        let col = self.column()?;
        self.expect(Tok::RParen, "')'")?;
        Ok(Projection::Aggregate(agg, col))
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let pos = self.pos();
        let negative = if *self.peek() == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        match self.advance() {
            Tok::Num(text) => match parse_number(&text) {
                Some(v) => Ok(Literal::Number(if negative { -v } else { v })),
                None => err(pos, format!("malformed number {text:?}")),
            },
            Tok::Str(s) if !negative => Ok(Literal::Text(s)),
            _ => err(pos, "expected literal or subquery"),
        }
    }

    fn query(&mut self, depth: usize) -> Result<QueryPlan, ParseError> {
        let start = self.pos();
        self.expect_keyword("select")?;
        let distinct = self.eat_keyword("distinct");
        let projection = self.projection()?;
        if distinct && projection.aggregate().is_some() {
            return err(
                start,
                "DISTINCT cannot be combined with an aggregate projection",
            );
        }
        self.expect_keyword("from")?;
        let table_pos = self.pos();
        match self.advance() {
            Tok::Word(w) if w.eq_ignore_ascii_case("t") => {}
            _ => return err(table_pos, "expected table name T"),
        }
        let mut plan = QueryPlan {
            projection,
            predicate: None,
            order_by: None,
            limit: None,
            distinct,
        };
        if self.eat_keyword("where") {
            let column = self.column()?;
            let op_pos = self.pos();
            let op = match self.advance() {
                Tok::Eq => CompareOp::Eq,
                Tok::Lt => CompareOp::Lt,
                Tok::Gt => CompareOp::Gt,
                _ => return err(op_pos, "expected one of =, <, >"),
            };
            let operand = if *self.peek() == Tok::LParen {
                let sub_pos = self.pos();
                self.advance();
                if depth >= 1 {
                    return err(sub_pos, "subqueries may not be nested");
                }
                let sub = self.query(depth + 1)?;
                self.expect(Tok::RParen, "')' closing the subquery")?;
                Operand::Subquery(Box::new(sub))
            } else {
                Operand::Literal(self.literal()?)
            };
            plan.predicate = Some(Predicate {
                column,
                op,
                operand,
            });
        }
        if self.eat_keyword("order") {
            self.expect_keyword("by")?;
            let column = self.column()?;
            let direction = if self.eat_keyword("desc") {
                Direction::Desc
            } else {
                self.eat_keyword("asc");
                Direction::Asc
            };
            plan.order_by = Some(OrderBy { column, direction });
        }
        if self.eat_keyword("limit") {
            let pos = self.pos();
            match self.advance() {
                Tok::Num(n) => match n.parse::<u64>() {
                    Ok(v) if v > 0 => plan.limit = Some(v),
                    _ => return err(pos, "LIMIT must be a positive integer"),
                },
                _ => return err(pos, "LIMIT must be a positive integer"),
            }
        }
        if plan.projection.aggregate().is_some()
            && (plan.order_by.is_some() || plan.limit.is_some())
        {
            return err(start, "aggregate projections cannot use ORDER BY or LIMIT");
        }
        Ok(plan)
    }
}

/// Parses an instantiated query. Placeholders such as `[Column1]` that
/// survived instantiation are rejected.
pub fn parse_query(text: &str) -> Result<QueryPlan, ParseError> {
    let mut lexer = Lexer { src: text, pos: 0 };
    let mut toks = Vec::new();
    loop {
        let (pos, tok) = lexer.next()?;
        let done = tok == Tok::Eof;
        toks.push((pos, tok));
        if done {
            break;
        }
    }
    let mut p = Parser { toks, i: 0 };
    let plan = p.query(0)?;
    if *p.peek() != Tok::Eof {
        return err(p.pos(), "unexpected trailing input");
    }
    Ok(plan)
}
