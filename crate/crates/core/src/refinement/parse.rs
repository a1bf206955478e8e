//! Surface syntax for refinements as written in protocol definition files.
//!
//! Infix operators `&& || ! < <= > >= == != + - *`, decimal integer and
//! float literals, `true`/`false`, double-quoted strings, bare identifiers
//! for variables, and `ENUM.ENTRY` for enum literals. Enum literals are
//! resolved against the loaded dialect at parse time so the resulting tree
//! carries the declared numeric entry value.

use std::fmt;

use thiserror::Error;

use super::{BinOp, RefExpr, Value};

/// Resolves `ENUM.ENTRY` literals to their declared numeric value.
pub trait EnumResolver {
    fn resolve_enum(&self, enum_name: &str, entry: &str) -> Option<i64>;
}

/// Resolver for contexts with no dialect loaded; every enum literal errors.
pub struct NoEnums;

impl EnumResolver for NoEnums {
    fn resolve_enum(&self, _enum_name: &str, _entry: &str) -> Option<i64> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at byte {at}")]
    UnexpectedChar { ch: char, at: usize },
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token `{token}` at byte {at}")]
    UnexpectedToken { token: String, at: usize },
    #[error("unknown enum entry `{enum_name}.{entry}`")]
    UnknownEnumEntry { enum_name: String, entry: String },
    #[error("malformed number `{0}`")]
    MalformedNumber(String),
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("trailing input after expression at byte {0}")]
    TrailingInput(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Float(f64),
    Str(String),
    Ident(String),
    EnumLit(String, String),
    Op(BinOp),
    Not,
    Minus,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Float(x) => write!(f, "{x:?}"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::EnumLit(e, n) => write!(f, "{e}.{n}"),
            Tok::Op(op) => write!(f, "{}", op.symbol()),
            Tok::Not => write!(f, "!"),
            Tok::Minus => write!(f, "-"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            '+' => {
                out.push((Tok::Op(BinOp::Add), i));
                i += 1;
            }
            '*' => {
                out.push((Tok::Op(BinOp::Mul), i));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push((Tok::Op(BinOp::Le), i));
                    i += 2;
                } else {
                    out.push((Tok::Op(BinOp::Lt), i));
                    i += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push((Tok::Op(BinOp::Ge), i));
                    i += 2;
                } else {
                    out.push((Tok::Op(BinOp::Gt), i));
                    i += 1;
                }
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push((Tok::Op(BinOp::Eq), i));
                    i += 2;
                } else {
                    return Err(ParseError::UnexpectedChar { ch: '=', at: i });
                }
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push((Tok::Op(BinOp::Ne), i));
                    i += 2;
                } else {
                    out.push((Tok::Not, i));
                    i += 1;
                }
            }
            '&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    out.push((Tok::Op(BinOp::And), i));
                    i += 2;
                } else {
                    return Err(ParseError::UnexpectedChar { ch: '&', at: i });
                }
            }
            '|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    out.push((Tok::Op(BinOp::Or), i));
                    i += 2;
                } else {
                    return Err(ParseError::UnexpectedChar { ch: '|', at: i });
                }
            }
            '"' => {
                let start = i + 1;
                let mut s = String::new();
                let mut j = start;
                loop {
                    match bytes.get(j) {
                        None => return Err(ParseError::UnterminatedString),
                        Some(b'"') => break,
                        Some(b'\\') => match bytes.get(j + 1) {
                            Some(b'"') => {
                                s.push('"');
                                j += 2;
                            }
                            Some(b'\\') => {
                                s.push('\\');
                                j += 2;
                            }
                            _ => return Err(ParseError::UnterminatedString),
                        },
                        Some(&b) => {
                            s.push(b as char);
                            j += 1;
                        }
                    }
                }
                out.push((Tok::Str(s), i));
                i = j + 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut is_float = false;
                if i < bytes.len()
                    && bytes[i] == b'.'
                    && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)
                {
                    is_float = true;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &src[start..i];
                if is_float {
                    let f: f64 = text
                        .parse()
                        .map_err(|_| ParseError::MalformedNumber(text.to_string()))?;
                    out.push((Tok::Float(f), start));
                } else {
                    let n: i64 = text
                        .parse()
                        .map_err(|_| ParseError::MalformedNumber(text.to_string()))?;
                    out.push((Tok::Int(n), start));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let name = src[start..i].to_string();
                // ENUM.ENTRY: a dot immediately followed by an identifier
                if i < bytes.len()
                    && bytes[i] == b'.'
                    && bytes
                        .get(i + 1)
                        .is_some_and(|b| (*b as char).is_ascii_alphabetic() || *b == b'_')
                {
                    i += 1;
                    let estart = i;
                    while i < bytes.len()
                        && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    out.push((Tok::EnumLit(name, src[estart..i].to_string()), start));
                } else {
                    out.push((Tok::Ident(name), start));
                }
            }
            other => return Err(ParseError::UnexpectedChar { ch: other, at: i }),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    resolver: &'a dyn EnumResolver,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_op(&self) -> Option<BinOp> {
        match self.peek() {
            Some(Tok::Op(op)) => Some(*op),
            Some(Tok::Minus) => Some(BinOp::Sub),
            _ => None,
        }
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        match self.toks.get(self.pos) {
            Some((t, at)) => ParseError::UnexpectedToken {
                token: t.to_string(),
                at: *at,
            },
            None => ParseError::UnexpectedEnd,
        }
    }

    fn or_expr(&mut self) -> Result<RefExpr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.peek_op() == Some(BinOp::Or) {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = RefExpr::bin(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<RefExpr, ParseError> {
        let mut lhs = self.cmp_expr()?;
        while self.peek_op() == Some(BinOp::And) {
            self.bump();
            let rhs = self.cmp_expr()?;
            lhs = RefExpr::bin(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<RefExpr, ParseError> {
        let lhs = self.add_expr()?;
        if let Some(op) = self.peek_op() {
            if matches!(
                op,
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
            ) {
                self.bump();
                let rhs = self.add_expr()?;
                return Ok(RefExpr::bin(op, lhs, rhs));
            }
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<RefExpr, ParseError> {
        let mut lhs = self.mul_expr()?;
        while let Some(op) = self.peek_op() {
            if matches!(op, BinOp::Add | BinOp::Sub) {
                self.bump();
                let rhs = self.mul_expr()?;
                lhs = RefExpr::bin(op, lhs, rhs);
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<RefExpr, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek_op() == Some(BinOp::Mul) {
            self.bump();
            let rhs = self.unary()?;
            lhs = RefExpr::bin(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<RefExpr, ParseError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.bump();
                Ok(RefExpr::Not(Box::new(self.unary()?)))
            }
            Some(Tok::Minus) => {
                self.bump();
                // fold negation into numeric literals so `-3` is a literal,
                // matching how rendered trees read back
                Ok(match self.unary()? {
                    RefExpr::Lit(Value::Int(i)) if i != i64::MIN => RefExpr::Lit(Value::Int(-i)),
                    RefExpr::Lit(Value::Float(f)) => RefExpr::Lit(Value::Float(-f)),
                    other => RefExpr::Neg(Box::new(other)),
                })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<RefExpr, ParseError> {
        match self.bump() {
            Some((Tok::Int(i), _)) => Ok(RefExpr::Lit(Value::Int(i))),
            Some((Tok::Float(f), _)) => Ok(RefExpr::Lit(Value::Float(f))),
            Some((Tok::Str(s), _)) => Ok(RefExpr::Lit(Value::Str(s))),
            Some((Tok::Ident(name), _)) => match name.as_str() {
                "true" => Ok(RefExpr::Lit(Value::Bool(true))),
                "false" => Ok(RefExpr::Lit(Value::Bool(false))),
                _ => Ok(RefExpr::Var(name)),
            },
            Some((Tok::EnumLit(enum_name, entry), _)) => {
                match self.resolver.resolve_enum(&enum_name, &entry) {
                    Some(value) => Ok(RefExpr::Lit(Value::Enum {
                        enum_name,
                        entry,
                        value,
                    })),
                    None => Err(ParseError::UnknownEnumEntry { enum_name, entry }),
                }
            }
            Some((Tok::LParen, _)) => {
                let e = self.or_expr()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(e),
                    Some(_) => {
                        self.pos -= 1;
                        Err(self.unexpected())
                    }
                    None => Err(self.unexpected()),
                }
            }
            Some(_) => {
                self.pos -= 1;
                Err(self.unexpected())
            }
            None => Err(self.unexpected()),
        }
    }
}

/// Parses one refinement expression; the whole input must be consumed.
pub fn parse_refinement(src: &str, resolver: &dyn EnumResolver) -> Result<RefExpr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        resolver,
    };
    let expr = p.or_expr()?;
    if p.pos != p.toks.len() {
        return Err(ParseError::TrailingInput(p.toks[p.pos].1));
    }
    Ok(expr)
}
