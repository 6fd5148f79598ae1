use std::collections::BTreeSet;

use crate::schema::SchemaDoc;

use super::ast::{BinOp, Builtin, Expr, ExprKind, Span, UnOp};
use super::types::{is_subtype, join, schema_to_type, unify, ExprType};
use super::ExprDiagnostic;

/// A program that passed inference, annotated per input arm.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    /// One annotated copy of the program per arm of the input schema.
    pub arms: Vec<(SchemaDoc, Expr)>,
    pub input: SchemaDoc,
    pub output: Option<SchemaDoc>,
    /// Join of the result types over all arms.
    pub result: ExprType,
}

/// Type-check `program` against an input schema and, when given, the
/// schema its result must fit. Union inputs are checked arm by arm and the
/// first failing arm is reported.
pub fn infer_type(
    program: &Expr,
    input: &SchemaDoc,
    expected: Option<&SchemaDoc>,
) -> Result<TypedProgram, Vec<ExprDiagnostic>> {
    let input_arms = input.arms();
    let many = input_arms.len() > 1;
    let expected_ty = expected.map(schema_to_type);
    let mut arms = Vec::new();
    let mut result: Option<ExprType> = None;
    for (i, arm) in input_arms.into_iter().enumerate() {
        let mut cx = Cx {
            msg: schema_to_type(arm),
            env: Vec::new(),
            diags: Vec::new(),
        };
        let mut annotated = program.clone();
        let info = cx.infer(&mut annotated);
        if let Some(info) = info {
            if info.optional {
                cx.diag(
                    program.span,
                    "optional-field",
                    "the result is an optional field; wrap it in coalesce(...)".into(),
                );
            } else if let Some(want) = &expected_ty {
                if !is_subtype(&info.ty, want) {
                    cx.diag(
                        program.span,
                        "output-mismatch",
                        format!("{} ⋢ {want}: the result does not fit the expected output", info.ty),
                    );
                }
            }
            result = Some(match result {
                None => info.ty,
                Some(prev) => join(&prev, &info.ty),
            });
        }
        if !cx.diags.is_empty() {
            let mut diags = cx.diags;
            if many {
                for d in &mut diags {
                    d.message = format!("input arm {}: {}", i + 1, d.message);
                }
            }
            diags.sort_by(|a, b| (a.line, a.col, &a.code).cmp(&(b.line, b.col, &b.code)));
            diags.dedup();
            return Err(diags);
        }
        arms.push((arm.clone(), annotated));
    }
    Ok(TypedProgram {
        arms,
        input: input.clone(),
        output: expected.cloned(),
        result: result.unwrap_or(ExprType::Never),
    })
}

#[derive(Debug, Clone)]
struct Info {
    ty: ExprType,
    optional: bool,
}

impl Info {
    fn of(ty: ExprType) -> Option<Info> {
        Some(Info {
            ty,
            optional: false,
        })
    }
}

struct Cx {
    msg: ExprType,
    env: Vec<(String, ExprType)>,
    diags: Vec<ExprDiagnostic>,
}

impl Cx {
    fn diag(&mut self, span: Span, code: &str, message: String) {
        self.diags.push(ExprDiagnostic::new(span, code, message));
    }

    fn mismatch(&mut self, span: Span, want: &str, found: &ExprType) -> Option<Info> {
        self.diag(span, "type-mismatch", format!("expected {want}, found {found}"));
        None
    }

    /// Infer and reject optional results, which only `coalesce` may consume.
    fn value(&mut self, e: &mut Expr) -> Option<ExprType> {
        let span = e.span;
        let info = self.infer(e)?;
        if info.optional {
            self.diag(
                span,
                "optional-field",
                "optional field used directly; wrap it in coalesce(...)".into(),
            );
            return None;
        }
        Some(info.ty)
    }

    fn infer(&mut self, e: &mut Expr) -> Option<Info> {
        let span = e.span;
        let info = self.infer_kind(&mut e.kind, span)?;
        e.ty = Some(info.ty.clone());
        Some(info)
    }

    fn infer_kind(&mut self, kind: &mut ExprKind, span: Span) -> Option<Info> {
        use ExprType as T;
        match kind {
            ExprKind::Bool(_) => Info::of(T::Bool),
            ExprKind::Int(_) => Info::of(T::Int),
            ExprKind::Num(_) => Info::of(T::Num),
            ExprKind::Str(_) => Info::of(T::Str),
            ExprKind::Msg => Info::of(self.msg.clone()),
            ExprKind::Var(name) => match self.env.iter().rev().find(|(n, _)| n == name) {
                Some((_, ty)) => Info::of(ty.clone()),
                None => {
                    self.diag(span, "unbound-variable", format!("unbound variable `{name}`"));
                    None
                }
            },
            ExprKind::Field(base, name) => {
                let base_ty = self.value(base)?;
                match &base_ty {
                    T::Obj(fields) => match fields.get(name.as_str()) {
                        Some(f) => Some(Info {
                            ty: f.ty.clone(),
                            optional: f.optional,
                        }),
                        None => {
                            let known: Vec<&str> = fields.keys().map(String::as_str).collect();
                            self.diag(
                                span,
                                "unknown-field",
                                format!("no field `{name}` in {base_ty} (fields: {})", known.join(", ")),
                            );
                            None
                        }
                    },
                    T::Never => None,
                    other => self.mismatch(span, &format!("an object with field `{name}`"), other),
                }
            }
            ExprKind::Let(name, value, body) => {
                let ty = self.value(value);
                self.env.push((name.clone(), ty.clone().unwrap_or(T::Never)));
                let body = self.infer(body);
                self.env.pop();
                ty?;
                body
            }
            ExprKind::If(c, a, b) => {
                let c_span = c.span;
                let ct = self.value(c);
                let at = self.value(a);
                let bt = self.value(b);
                if ct? != T::Bool {
                    return self.mismatch(c_span, "Bool", c.ty.as_ref().expect("annotated"));
                }
                Info::of(join(&at?, &bt?))
            }
            ExprKind::Unary(op, inner) => {
                let t = self.value(inner)?;
                match (op, &t) {
                    (UnOp::Neg, T::Int | T::Num) => Info::of(t),
                    (UnOp::Not, T::Bool) => Info::of(T::Bool),
                    (UnOp::Neg, other) => self.mismatch(span, "Int or Num", other),
                    (UnOp::Not, other) => self.mismatch(span, "Bool", other),
                }
            }
            ExprKind::Binary(op, l, r) => {
                let lt = self.value(l);
                let rt = self.value(r);
                let (lt, rt) = (lt?, rt?);
                self.binary(*op, &lt, &rt, span)
            }
            ExprKind::Object(fields) => {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                let mut ok = true;
                for (k, v) in fields.iter_mut() {
                    if !seen.insert(k.clone()) {
                        self.diag(v.span, "duplicate-field", format!("field `{k}` appears twice"));
                        ok = false;
                    }
                    match self.value(v) {
                        Some(t) => out.push((k.clone(), t, false)),
                        None => ok = false,
                    }
                }
                ok.then(|| Info {
                    ty: T::obj(out),
                    optional: false,
                })
            }
            ExprKind::Array(items) => {
                let mut ty = Some(T::Never);
                for item in items.iter_mut() {
                    let t = self.value(item);
                    ty = match (ty, t) {
                        (Some(acc), Some(t)) => Some(join(&acc, &t)),
                        _ => None,
                    };
                }
                Info::of(T::arr(ty?))
            }
            ExprKind::Call(f, args) => self.call(*f, args, span),
        }
    }

    fn binary(&mut self, op: BinOp, l: &ExprType, r: &ExprType, span: Span) -> Option<Info> {
        use ExprType as T;
        let sym = op.symbol();
        match op {
            BinOp::Add if *l == T::Str && *r == T::Str => Info::of(T::Str),
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                if l.is_numeric() && r.is_numeric() {
                    Info::of(if *l == T::Int && *r == T::Int { T::Int } else { T::Num })
                } else {
                    self.diag(
                        span,
                        "type-mismatch",
                        format!("`{sym}` needs numeric operands, found {l} and {r}"),
                    );
                    None
                }
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                if (l.is_numeric() && r.is_numeric()) || (*l == T::Str && *r == T::Str) {
                    Info::of(T::Bool)
                } else {
                    self.diag(
                        span,
                        "type-mismatch",
                        format!("`{sym}` compares two numbers or two strings, found {l} and {r}"),
                    );
                    None
                }
            }
            BinOp::Eq | BinOp::Ne => {
                if unify(l, r).is_some() {
                    Info::of(T::Bool)
                } else {
                    self.diag(span, "type-mismatch", format!("cannot compare {l} with {r}"));
                    None
                }
            }
            BinOp::And | BinOp::Or => {
                if *l == T::Bool && *r == T::Bool {
                    Info::of(T::Bool)
                } else {
                    self.diag(
                        span,
                        "type-mismatch",
                        format!("`{sym}` needs Bool operands, found {l} and {r}"),
                    );
                    None
                }
            }
        }
    }

    fn call(&mut self, f: Builtin, args: &mut [Expr], span: Span) -> Option<Info> {
        use ExprType as T;
        if args.len() != f.arity() {
            self.diag(
                span,
                "arity",
                format!("{f} takes {} argument(s), found {}", f.arity(), args.len()),
            );
            return None;
        }
        if f == Builtin::Coalesce {
            let (first, rest) = args.split_first_mut().expect("arity checked");
            let a = self.infer(first);
            let b = self.value(&mut rest[0]);
            return Info::of(join(&a?.ty, &b?));
        }
        let mut tys = Vec::new();
        for a in args.iter_mut() {
            tys.push(self.value(a));
        }
        let tys: Vec<ExprType> = tys.into_iter().collect::<Option<_>>()?;
        match (f, tys.as_slice()) {
            (Builtin::Len, [T::Arr(_) | T::Str]) => Info::of(T::Int),
            (Builtin::Len, [t]) => self.mismatch(span, "an array or string", t),
            (Builtin::Abs, [t]) if t.is_numeric() => Info::of(t.clone()),
            (Builtin::Round, [t]) if t.is_numeric() => Info::of(T::Int),
            (Builtin::Abs | Builtin::Round, [t]) => self.mismatch(span, "Int or Num", t),
            (Builtin::Min | Builtin::Max, [a, b]) if a.is_numeric() && b.is_numeric() => {
                Info::of(unify(a, b).expect("numeric types unify"))
            }
            (Builtin::Min | Builtin::Max, [a, b]) => {
                self.diag(span, "type-mismatch", format!("{f} needs numbers, found {a} and {b}"));
                None
            }
            (Builtin::Contains, [T::Str, T::Str]) => Info::of(T::Bool),
            (Builtin::Contains, [T::Arr(item), x]) if unify(item, x).is_some() => Info::of(T::Bool),
            (Builtin::Contains, [a, b]) => {
                self.diag(
                    span,
                    "type-mismatch",
                    format!("contains needs ([T], T) or (Str, Str), found ({a}, {b})"),
                );
                None
            }
            _ => unreachable!("arity checked"),
        }
    }
}
