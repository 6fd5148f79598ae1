use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::schema::{conforms, validate_value, SchemaDoc};

use super::ast::{BinOp, Builtin, Expr, ExprKind, Span, UnOp};
use super::infer::TypedProgram;
use super::types::ExprType;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{line}:{col}: division by zero")]
    DivisionByZero { line: usize, col: usize },
    #[error("{line}:{col}: integer overflow")]
    Overflow { line: usize, col: usize },
    #[error("{line}:{col}: result is not a finite number")]
    NonFinite { line: usize, col: usize },
    #[error("output does not fit the expected schema at `{path}`: {reason}")]
    OutputOutOfRange { path: String, reason: String },
    #[error("input does not conform to the program's input schema")]
    InputMismatch,
    /// A value of the wrong shape reached an operator. Inference rules this out.
    #[error("{line}:{col}: type fault: {message}")]
    TypeFault {
        line: usize,
        col: usize,
        message: String,
    },
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::DivisionByZero { .. } => "division-by-zero",
            EvalError::Overflow { .. } => "overflow",
            EvalError::NonFinite { .. } => "non-finite",
            EvalError::OutputOutOfRange { .. } => "output-out-of-range",
            EvalError::InputMismatch => "input-mismatch",
            EvalError::TypeFault { .. } => "type-fault",
        }
    }

    pub fn is_type_fault(&self) -> bool {
        matches!(self, EvalError::TypeFault { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum V {
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<V>),
    Obj(BTreeMap<String, V>),
    /// An optional field that is not present.
    Absent,
}

type R = Result<V, EvalError>;

/// Evaluate a typed program on one input value. The result is checked
/// against the expected output schema, including ranges erased by typing.
pub fn evaluate(program: &TypedProgram, input: &Value) -> Result<Value, EvalError> {
    let (arm, expr) = program
        .arms
        .iter()
        .find(|(schema, _)| conforms(input, schema))
        .ok_or(EvalError::InputMismatch)?;
    let msg = from_json(input, arm).ok_or(EvalError::InputMismatch)?;
    let mut ev = Eval {
        msg,
        env: Vec::new(),
    };
    let out = ev.eval(expr)?;
    let json = to_json(&out, expr.span)?;
    if let Some(expected) = &program.output {
        let v = validate_value(&json, expected).map_err(|e| EvalError::OutputOutOfRange {
            path: String::new(),
            reason: e.to_string(),
        })?;
        if let Some(first) = v.violations.into_iter().next() {
            return Err(EvalError::OutputOutOfRange {
                path: first.path,
                reason: first.reason,
            });
        }
    }
    Ok(json)
}

fn from_json(value: &Value, schema: &SchemaDoc) -> Option<V> {
    Some(match schema {
        SchemaDoc::Boolean => V::Bool(value.as_bool()?),
        SchemaDoc::Integer(_) => V::Int(value.as_i64()?),
        SchemaDoc::Number(_) => V::Num(value.as_f64()?),
        SchemaDoc::String(_) => V::Str(value.as_str()?.to_string()),
        SchemaDoc::Array { items, .. } => V::Arr(
            value
                .as_array()?
                .iter()
                .map(|v| from_json(v, items))
                .collect::<Option<_>>()?,
        ),
        SchemaDoc::Object { properties, .. } => {
            let obj = value.as_object()?;
            V::Obj(
                obj.iter()
                    .map(|(k, v)| Some((k.clone(), from_json(v, properties.get(k)?)?)))
                    .collect::<Option<_>>()?,
            )
        }
        SchemaDoc::Union(arms) => {
            let arm = arms.iter().find(|a| conforms(value, a))?;
            from_json(value, arm)?
        }
    })
}

fn to_json(v: &V, span: Span) -> Result<Value, EvalError> {
    Ok(match v {
        V::Bool(b) => Value::Bool(*b),
        V::Int(i) => Value::from(*i),
        V::Num(n) => Value::Number(Number::from_f64(*n).ok_or(EvalError::NonFinite {
            line: span.line,
            col: span.col,
        })?),
        V::Str(s) => Value::String(s.clone()),
        V::Arr(items) => Value::Array(items.iter().map(|i| to_json(i, span)).collect::<Result<_, _>>()?),
        V::Obj(fields) => {
            let mut m = Map::new();
            for (k, x) in fields {
                m.insert(k.clone(), to_json(x, span)?);
            }
            Value::Object(m)
        }
        V::Absent => return Err(fault(span, "absent optional value escaped")),
    })
}

fn fault(span: Span, message: &str) -> EvalError {
    EvalError::TypeFault {
        line: span.line,
        col: span.col,
        message: message.into(),
    }
}

/// Widen integers to numbers wherever the static type asks for `Num`.
fn coerce(v: V, ty: &ExprType) -> V {
    match (v, ty) {
        (V::Int(i), ExprType::Num) => V::Num(i as f64),
        (V::Int(i), ExprType::Union(arms))
            if arms.contains(&ExprType::Num) && !arms.contains(&ExprType::Int) =>
        {
            V::Num(i as f64)
        }
        (V::Arr(items), ExprType::Arr(t)) => V::Arr(items.into_iter().map(|x| coerce(x, t)).collect()),
        (V::Obj(fields), ExprType::Obj(ft)) => V::Obj(
            fields
                .into_iter()
                .map(|(k, x)| {
                    let x = match ft.get(&k) {
                        Some(f) => coerce(x, &f.ty),
                        None => x,
                    };
                    (k, x)
                })
                .collect(),
        ),
        (v, _) => v,
    }
}

struct Eval {
    msg: V,
    env: Vec<(String, V)>,
}

impl Eval {
    fn eval(&mut self, e: &Expr) -> R {
        let v = self.eval_kind(e)?;
        Ok(match (&e.kind, &e.ty) {
            (
                ExprKind::If(..)
                | ExprKind::Array(_)
                | ExprKind::Call(Builtin::Coalesce | Builtin::Min | Builtin::Max, _),
                Some(ty),
            ) => coerce(v, ty),
            _ => v,
        })
    }

    fn eval_kind(&mut self, e: &Expr) -> R {
        let span = e.span;
        match &e.kind {
            ExprKind::Bool(b) => Ok(V::Bool(*b)),
            ExprKind::Int(i) => Ok(V::Int(*i)),
            ExprKind::Num(n) => Ok(V::Num(*n)),
            ExprKind::Str(s) => Ok(V::Str(s.clone())),
            ExprKind::Msg => Ok(self.msg.clone()),
            ExprKind::Var(name) => self
                .env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| fault(span, "unbound variable")),
            ExprKind::Field(base, name) => match self.eval(base)? {
                V::Obj(mut fields) => Ok(fields.remove(name).unwrap_or(V::Absent)),
                _ => Err(fault(span, "field access on a non-object")),
            },
            ExprKind::Let(name, value, body) => {
                let v = self.eval(value)?;
                self.env.push((name.clone(), v));
                let out = self.eval(body);
                self.env.pop();
                out
            }
            ExprKind::If(c, a, b) => match self.eval(c)? {
                V::Bool(true) => self.eval(a),
                V::Bool(false) => self.eval(b),
                _ => Err(fault(span, "non-boolean condition")),
            },
            ExprKind::Unary(op, inner) => {
                let v = self.eval(inner)?;
                match (op, v) {
                    (UnOp::Neg, V::Int(i)) => i.checked_neg().map(V::Int).ok_or(overflow(span)),
                    (UnOp::Neg, V::Num(n)) => Ok(V::Num(-n)),
                    (UnOp::Not, V::Bool(b)) => Ok(V::Bool(!b)),
                    _ => Err(fault(span, "bad unary operand")),
                }
            }
            ExprKind::Binary(BinOp::And, l, r) => match self.eval(l)? {
                V::Bool(false) => Ok(V::Bool(false)),
                V::Bool(true) => self.eval(r),
                _ => Err(fault(span, "non-boolean operand")),
            },
            ExprKind::Binary(BinOp::Or, l, r) => match self.eval(l)? {
                V::Bool(true) => Ok(V::Bool(true)),
                V::Bool(false) => self.eval(r),
                _ => Err(fault(span, "non-boolean operand")),
            },
            ExprKind::Binary(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                binary(*op, a, b, span)
            }
            ExprKind::Object(fields) => {
                let mut out = BTreeMap::new();
                for (k, v) in fields {
                    out.insert(k.clone(), self.eval(v)?);
                }
                Ok(V::Obj(out))
            }
            ExprKind::Array(items) => Ok(V::Arr(
                items.iter().map(|i| self.eval(i)).collect::<Result<_, _>>()?,
            )),
            ExprKind::Call(f, args) => {
                let vals = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                call(*f, vals, span)
            }
        }
    }
}

fn overflow(span: Span) -> EvalError {
    EvalError::Overflow {
        line: span.line,
        col: span.col,
    }
}

fn finite(n: f64, span: Span) -> R {
    if n.is_finite() {
        Ok(V::Num(n))
    } else {
        Err(EvalError::NonFinite {
            line: span.line,
            col: span.col,
        })
    }
}

fn as_f64(v: &V) -> Option<f64> {
    match v {
        V::Int(i) => Some(*i as f64),
        V::Num(n) => Some(*n),
        _ => None,
    }
}

fn binary(op: BinOp, a: V, b: V, span: Span) -> R {
    let div0 = EvalError::DivisionByZero {
        line: span.line,
        col: span.col,
    };
    match (op, &a, &b) {
        (BinOp::Add, V::Str(x), V::Str(y)) => Ok(V::Str(format!("{x}{y}"))),
        (BinOp::Eq, _, _) => Ok(V::Bool(equal(&a, &b))),
        (BinOp::Ne, _, _) => Ok(V::Bool(!equal(&a, &b))),
        (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, _, _) => {
            let ord = match (&a, &b) {
                (V::Int(x), V::Int(y)) => x.cmp(y),
                (V::Str(x), V::Str(y)) => x.cmp(y),
                _ => match (as_f64(&a), as_f64(&b)) {
                    (Some(x), Some(y)) => x.partial_cmp(&y).ok_or_else(|| fault(span, "NaN"))?,
                    _ => return Err(fault(span, "incomparable operands")),
                },
            };
            Ok(V::Bool(match op {
                BinOp::Lt => ord == Ordering::Less,
                BinOp::Le => ord != Ordering::Greater,
                BinOp::Gt => ord == Ordering::Greater,
                _ => ord != Ordering::Less,
            }))
        }
        (_, V::Int(x), V::Int(y)) => {
            let (x, y) = (*x, *y);
            let r = match op {
                BinOp::Add => x.checked_add(y),
                BinOp::Sub => x.checked_sub(y),
                BinOp::Mul => x.checked_mul(y),
                BinOp::Div | BinOp::Rem if y == 0 => return Err(div0),
                BinOp::Div => x.checked_div(y),
                BinOp::Rem => x.checked_rem(y),
                _ => return Err(fault(span, "bad integer operator")),
            };
            r.map(V::Int).ok_or(overflow(span))
        }
        _ => {
            let (Some(x), Some(y)) = (as_f64(&a), as_f64(&b)) else {
                return Err(fault(span, "non-numeric operand"));
            };
            match op {
                BinOp::Add => finite(x + y, span),
                BinOp::Sub => finite(x - y, span),
                BinOp::Mul => finite(x * y, span),
                BinOp::Div | BinOp::Rem if y == 0.0 => Err(div0),
                BinOp::Div => finite(x / y, span),
                BinOp::Rem => finite(x % y, span),
                _ => Err(fault(span, "bad numeric operator")),
            }
        }
    }
}

fn equal(a: &V, b: &V) -> bool {
    match (a, b) {
        (V::Int(x), V::Num(y)) | (V::Num(y), V::Int(x)) => (*x as f64) == *y,
        (V::Arr(x), V::Arr(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| equal(p, q)),
        (V::Obj(x), V::Obj(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| equal(v, w)))
        }
        _ => a == b,
    }
}

fn call(f: Builtin, mut args: Vec<V>, span: Span) -> R {
    let b = if args.len() > 1 { args.pop() } else { None };
    let a = args.pop().ok_or_else(|| fault(span, "missing argument"))?;
    match (f, a, b) {
        (Builtin::Len, V::Arr(items), None) => Ok(V::Int(items.len() as i64)),
        (Builtin::Len, V::Str(s), None) => Ok(V::Int(s.chars().count() as i64)),
        (Builtin::Abs, V::Int(i), None) => i.checked_abs().map(V::Int).ok_or(overflow(span)),
        (Builtin::Abs, V::Num(n), None) => Ok(V::Num(n.abs())),
        (Builtin::Round, V::Int(i), None) => Ok(V::Int(i)),
        (Builtin::Round, V::Num(n), None) => {
            let r = n.round();
            // i64::MAX as f64 rounds up to 2^63, which is out of range
            if r >= -(2f64.powi(63)) && r < 2f64.powi(63) {
                Ok(V::Int(r as i64))
            } else {
                Err(overflow(span))
            }
        }
        (Builtin::Min | Builtin::Max, V::Int(x), Some(V::Int(y))) => {
            Ok(V::Int(if f == Builtin::Min { x.min(y) } else { x.max(y) }))
        }
        (Builtin::Min | Builtin::Max, x, Some(y)) => {
            let (Some(x), Some(y)) = (as_f64(&x), as_f64(&y)) else {
                return Err(fault(span, "non-numeric argument"));
            };
            Ok(V::Num(if f == Builtin::Min { x.min(y) } else { x.max(y) }))
        }
        (Builtin::Contains, V::Str(h), Some(V::Str(n))) => Ok(V::Bool(h.contains(n.as_str()))),
        (Builtin::Contains, V::Arr(items), Some(x)) => Ok(V::Bool(items.iter().any(|i| equal(i, &x)))),
        (Builtin::Coalesce, V::Absent, Some(d)) => Ok(d),
        (Builtin::Coalesce, v, Some(_)) => Ok(v),
        _ => Err(fault(span, "bad builtin arguments")),
    }
}
