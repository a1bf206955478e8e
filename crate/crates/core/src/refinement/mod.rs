//! The refinement-predicate language.
//!
//! Refinements are boolean expressions attached to protocol messages and to
//! recursion variables (`x > 7`, `curr < N && x == curr`). They are evaluated
//! at runtime over a layered environment of payload bindings, loop variables,
//! vehicle state, shadowed parameters, and static configuration.
//!
//! Evaluation is total: every failure mode (unbound variable, type mismatch,
//! integer overflow) is a value-level error, and [`eval_pred`] folds errors
//! into a false verdict. A monitor must never forward a message it cannot
//! positively validate.

mod parse;

pub use parse::{parse_refinement, EnumResolver, NoEnums, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest integer magnitude that converts to `f64` without rounding.
const MAX_EXACT_FLOAT_INT: i64 = 1 << 53;

/// A runtime value carried by a payload field, a protocol variable, or a
/// refinement literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    /// An enum entry resolved against the loaded dialect; `value` always
    /// equals the entry value the dialect declares.
    Enum {
        enum_name: String,
        entry: String,
        value: i64,
    },
    Str(String),
    /// Homogeneous list; all elements share one variant.
    Array(Vec<Value>),
}

impl Value {
    pub fn enum_entry(enum_name: &str, entry: &str, value: i64) -> Self {
        Value::Enum {
            enum_name: enum_name.to_string(),
            entry: entry.to_string(),
            value,
        }
    }

    /// Variant name for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Bool(_) => "bool",
            Value::Enum { .. } => "enum",
            Value::Str(_) => "str",
            Value::Array(_) => "array",
        }
    }

    /// Numeric view used by comparisons and arithmetic; enums count as their
    /// declared entry value.
    fn as_num(&self) -> Option<Num> {
        match self {
            Value::Int(i) => Some(Num::Int(*i)),
            Value::Float(f) => Some(Num::Float(*f)),
            Value::Enum { value, .. } => Some(Num::Int(*value)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Enum {
                enum_name, entry, ..
            } => write!(f, "{enum_name}.{entry}"),
            Value::Str(s) => write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
            Value::Array(items) => {
                write!(f, "[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Num {
    Int(i64),
    Float(f64),
}

/// Binary operators of the refinement language. There is deliberately no
/// division: no shipped refinement needs it and it would drag in
/// divide-by-zero semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul => 5,
        }
    }
}

/// Refinement expression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RefExpr {
    Lit(Value),
    Var(String),
    Neg(Box<RefExpr>),
    Not(Box<RefExpr>),
    Bin {
        op: BinOp,
        lhs: Box<RefExpr>,
        rhs: Box<RefExpr>,
    },
}

impl RefExpr {
    pub fn var(name: &str) -> Self {
        RefExpr::Var(name.to_string())
    }

    pub fn int(i: i64) -> Self {
        RefExpr::Lit(Value::Int(i))
    }

    pub fn float(f: f64) -> Self {
        RefExpr::Lit(Value::Float(f))
    }

    pub fn str_lit(s: &str) -> Self {
        RefExpr::Lit(Value::Str(s.to_string()))
    }

    pub fn bin(op: BinOp, lhs: RefExpr, rhs: RefExpr) -> Self {
        RefExpr::Bin {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn and(lhs: RefExpr, rhs: RefExpr) -> Self {
        RefExpr::bin(BinOp::And, lhs, rhs)
    }

    pub fn or(lhs: RefExpr, rhs: RefExpr) -> Self {
        RefExpr::bin(BinOp::Or, lhs, rhs)
    }

    fn precedence(&self) -> u8 {
        match self {
            RefExpr::Lit(_) | RefExpr::Var(_) => 7,
            RefExpr::Neg(_) | RefExpr::Not(_) => 6,
            RefExpr::Bin { op, .. } => op.precedence(),
        }
    }
}

/// Renders the surface syntax: `curr < N && x == curr`. Parenthesizes only
/// where precedence requires it, so rendered text re-parses to the same tree.
impl fmt::Display for RefExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &RefExpr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "(")?;
                write!(f, "{e}")?;
                write!(f, ")")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            RefExpr::Lit(v) => write!(f, "{v}"),
            RefExpr::Var(name) => write!(f, "{name}"),
            RefExpr::Neg(e) => {
                write!(f, "-")?;
                child(f, e, 6)
            }
            RefExpr::Not(e) => {
                write!(f, "!")?;
                child(f, e, 6)
            }
            RefExpr::Bin { op, lhs, rhs } => {
                let p = op.precedence();
                // comparisons are non-associative: parenthesize both sides;
                // everything else is left-associative
                let nonassoc = matches!(
                    op,
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
                );
                child(f, lhs, if nonassoc { p + 1 } else { p })?;
                write!(f, " {} ", op.symbol())?;
                child(f, rhs, p + 1)
            }
        }
    }
}

/// Layered variable bindings, innermost layer first. Lookup resolves to the
/// innermost layer defining the name; layers are immutable during one
/// evaluation.
#[derive(Debug, Clone, Default)]
pub struct Env {
    layers: Vec<BTreeMap<String, Value>>,
}

impl Env {
    pub fn new() -> Self {
        Env { layers: Vec::new() }
    }

    /// Innermost-first layer list.
    pub fn from_layers(layers: Vec<BTreeMap<String, Value>>) -> Self {
        Env { layers }
    }

    /// Single-layer environment, convenient in tests.
    pub fn of<I, S>(bindings: I) -> Self
    where
        I: IntoIterator<Item = (S, Value)>,
        S: Into<String>,
    {
        Env {
            layers: vec![bindings.into_iter().map(|(k, v)| (k.into(), v)).collect()],
        }
    }

    /// Appends a layer *outside* all existing layers.
    pub fn push_outer(&mut self, layer: BTreeMap<String, Value>) {
        self.layers.push(layer);
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        self.layers.iter().find_map(|l| l.get(name))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    /// The bound subset of `names`, used for violation-report snapshots.
    pub fn snapshot(&self, names: &BTreeSet<String>) -> BTreeMap<String, Value> {
        names
            .iter()
            .filter_map(|n| self.lookup(n).map(|v| (n.clone(), v.clone())))
            .collect()
    }
}

/// Evaluation failure. Every variant makes the enclosing refinement fail
/// closed via [`eval_pred`].
#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("type mismatch: `{op}` applied to {lhs} and {rhs}")]
    TypeMismatch {
        op: String,
        lhs: String,
        rhs: String,
    },
    #[error("integer overflow in `{0}`")]
    IntOverflow(String),
    #[error("integer {0} too large for exact float conversion")]
    IntTooLargeForFloat(i64),
}

fn mismatch(op: &str, lhs: &Value, rhs: &Value) -> EvalError {
    EvalError::TypeMismatch {
        op: op.to_string(),
        lhs: lhs.kind().to_string(),
        rhs: rhs.kind().to_string(),
    }
}

fn to_f64_exact(i: i64) -> Result<f64, EvalError> {
    if i.abs() < MAX_EXACT_FLOAT_INT {
        Ok(i as f64)
    } else {
        Err(EvalError::IntTooLargeForFloat(i))
    }
}

fn arith(op: BinOp, lhs: &Value, rhs: &Value) -> Result<Value, EvalError> {
    let (a, b) = match (lhs.as_num(), rhs.as_num()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(mismatch(op.symbol(), lhs, rhs)),
    };
    match (a, b) {
        (Num::Int(x), Num::Int(y)) => {
            let r = match op {
                BinOp::Add => x.checked_add(y),
                BinOp::Sub => x.checked_sub(y),
                BinOp::Mul => x.checked_mul(y),
                _ => unreachable!("arith called with non-arithmetic op"),
            };
            r.map(Value::Int)
                .ok_or_else(|| EvalError::IntOverflow(op.symbol().to_string()))
        }
        _ => {
            let x = match a {
                Num::Int(i) => to_f64_exact(i)?,
                Num::Float(f) => f,
            };
            let y = match b {
                Num::Int(i) => to_f64_exact(i)?,
                Num::Float(f) => f,
            };
            Ok(Value::Float(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                _ => unreachable!("arith called with non-arithmetic op"),
            }))
        }
    }
}

fn compare_order(op: BinOp, lhs: &Value, rhs: &Value) -> Result<bool, EvalError> {
    let (a, b) = match (lhs.as_num(), rhs.as_num()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(mismatch(op.symbol(), lhs, rhs)),
    };
    let (x, y) = match (a, b) {
        (Num::Int(x), Num::Int(y)) => {
            return Ok(match op {
                BinOp::Lt => x < y,
                BinOp::Le => x <= y,
                BinOp::Gt => x > y,
                BinOp::Ge => x >= y,
                _ => unreachable!(),
            })
        }
        (Num::Int(x), Num::Float(y)) => (to_f64_exact(x)?, y),
        (Num::Float(x), Num::Int(y)) => (x, to_f64_exact(y)?),
        (Num::Float(x), Num::Float(y)) => (x, y),
    };
    Ok(match op {
        BinOp::Lt => x < y,
        BinOp::Le => x <= y,
        BinOp::Gt => x > y,
        BinOp::Ge => x >= y,
        _ => unreachable!(),
    })
}

fn value_eq(lhs: &Value, rhs: &Value) -> Result<bool, EvalError> {
    match (lhs, rhs) {
        (Value::Str(a), Value::Str(b)) => Ok(a == b),
        (Value::Bool(a), Value::Bool(b)) => Ok(a == b),
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return Ok(false);
            }
            for (x, y) in a.iter().zip(b) {
                if !value_eq(x, y)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => match (lhs.as_num(), rhs.as_num()) {
            (Some(Num::Int(a)), Some(Num::Int(b))) => Ok(a == b),
            (Some(a), Some(b)) => {
                let x = match a {
                    Num::Int(i) => to_f64_exact(i)?,
                    Num::Float(f) => f,
                };
                let y = match b {
                    Num::Int(i) => to_f64_exact(i)?,
                    Num::Float(f) => f,
                };
                Ok(x == y)
            }
            _ => Err(mismatch("==", lhs, rhs)),
        },
    }
}

fn as_bool(op: &str, v: &Value, side: &str) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => Err(EvalError::TypeMismatch {
            op: op.to_string(),
            lhs: side.to_string(),
            rhs: other.kind().to_string(),
        }),
    }
}

/// Evaluates an expression over an environment. Deterministic; mixed
/// int/float arithmetic promotes the integer side exactly; `&&` and `||`
/// short-circuit left to right.
pub fn eval_expr(expr: &RefExpr, env: &Env) -> Result<Value, EvalError> {
    match expr {
        RefExpr::Lit(v) => Ok(v.clone()),
        RefExpr::Var(name) => env
            .lookup(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(name.clone())),
        RefExpr::Neg(e) => match eval_expr(e, env)? {
            Value::Int(i) => i
                .checked_neg()
                .map(Value::Int)
                .ok_or_else(|| EvalError::IntOverflow("-".to_string())),
            Value::Float(f) => Ok(Value::Float(-f)),
            other => Err(EvalError::TypeMismatch {
                op: "-".to_string(),
                lhs: "unary".to_string(),
                rhs: other.kind().to_string(),
            }),
        },
        RefExpr::Not(e) => {
            let v = eval_expr(e, env)?;
            Ok(Value::Bool(!as_bool("!", &v, "unary")?))
        }
        RefExpr::Bin { op, lhs, rhs } => match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul => {
                let l = eval_expr(lhs, env)?;
                let r = eval_expr(rhs, env)?;
                arith(*op, &l, &r)
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let l = eval_expr(lhs, env)?;
                let r = eval_expr(rhs, env)?;
                compare_order(*op, &l, &r).map(Value::Bool)
            }
            BinOp::Eq => {
                let l = eval_expr(lhs, env)?;
                let r = eval_expr(rhs, env)?;
                value_eq(&l, &r).map(Value::Bool)
            }
            BinOp::Ne => {
                let l = eval_expr(lhs, env)?;
                let r = eval_expr(rhs, env)?;
                value_eq(&l, &r).map(|b| Value::Bool(!b))
            }
            BinOp::And => {
                let l = eval_expr(lhs, env)?;
                if !as_bool("&&", &l, "left")? {
                    return Ok(Value::Bool(false));
                }
                let r = eval_expr(rhs, env)?;
                Ok(Value::Bool(as_bool("&&", &r, "right")?))
            }
            BinOp::Or => {
                let l = eval_expr(lhs, env)?;
                if as_bool("||", &l, "left")? {
                    return Ok(Value::Bool(true));
                }
                let r = eval_expr(rhs, env)?;
                Ok(Value::Bool(as_bool("||", &r, "right")?))
            }
        },
    }
}

/// Why a predicate did not hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PredFailure {
    /// Evaluated cleanly to `false`.
    ValueFalse,
    /// Evaluated to a non-boolean value.
    NonBoolean(String),
    /// Evaluation failed; fail closed.
    Error(EvalError),
}

impl fmt::Display for PredFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredFailure::ValueFalse => write!(f, "refinement evaluated to false"),
            PredFailure::NonBoolean(kind) => {
                write!(f, "refinement evaluated to non-boolean {kind}")
            }
            PredFailure::Error(e) => write!(f, "evaluation error: {e}"),
        }
    }
}

/// Predicate verdict: holds, or fails with a reason suitable for a
/// violation report.
#[derive(Debug, Clone, PartialEq)]
pub enum PredOutcome {
    Holds,
    Fails(PredFailure),
}

impl PredOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, PredOutcome::Holds)
    }
}

/// True iff `expr` evaluates to boolean true. Errors never escape: an
/// unbound variable, a type mismatch, or an overflow all yield a failing
/// verdict with the underlying reason attached.
pub fn eval_pred(expr: &RefExpr, env: &Env) -> PredOutcome {
    match eval_expr(expr, env) {
        Ok(Value::Bool(true)) => PredOutcome::Holds,
        Ok(Value::Bool(false)) => PredOutcome::Fails(PredFailure::ValueFalse),
        Ok(other) => PredOutcome::Fails(PredFailure::NonBoolean(other.kind().to_string())),
        Err(e) => PredOutcome::Fails(PredFailure::Error(e)),
    }
}

/// Exact set of variable names appearing in the tree.
pub fn free_vars(expr: &RefExpr) -> BTreeSet<String> {
    fn walk(e: &RefExpr, out: &mut BTreeSet<String>) {
        match e {
            RefExpr::Lit(_) => {}
            RefExpr::Var(name) => {
                out.insert(name.clone());
            }
            RefExpr::Neg(inner) | RefExpr::Not(inner) => walk(inner, out),
            RefExpr::Bin { lhs, rhs, .. } => {
                walk(lhs, out);
                walk(rhs, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(expr, &mut out);
    out
}
