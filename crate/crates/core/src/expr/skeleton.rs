use std::collections::BTreeSet;

use serde_json::Value;

use crate::schema::SchemaDoc;

use super::ast::{is_ident, Expr, ExprKind};
use super::pretty::pretty_print;

/// Starter source for a function node: one `let` per top-level input
/// field and a placeholder literal of the output's shape.
pub fn generate_skeleton(input: &SchemaDoc, output: Option<&SchemaDoc>) -> String {
    let body = match output {
        Some(schema) => placeholder(schema),
        None => Expr::bare(ExprKind::Object(vec![])),
    };
    let mut bindings = Vec::new();
    if let SchemaDoc::Object {
        properties,
        required,
    } = input
    {
        let mut used = BTreeSet::new();
        for (name, schema) in properties {
            let var = fresh_name(name, &mut used);
            let access = Expr::bare(ExprKind::Field(
                Box::new(Expr::bare(ExprKind::Msg)),
                name.clone(),
            ));
            let value = if required.contains(name) {
                access
            } else {
                Expr::bare(ExprKind::Call(
                    super::ast::Builtin::Coalesce,
                    vec![access, placeholder(schema)],
                ))
            };
            bindings.push((var, value));
        }
    }
    let program = bindings.into_iter().rev().fold(body, |acc, (var, value)| {
        Expr::bare(ExprKind::Let(var, Box::new(value), Box::new(acc)))
    });
    pretty_print(&program)
}

fn fresh_name(field: &str, used: &mut BTreeSet<String>) -> String {
    let mut base: String = field
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if !is_ident(&base) {
        base = format!("v_{base}");
    }
    let mut name = base.clone();
    let mut n = 2;
    while !used.insert(name.clone()) {
        name = format!("{base}_{n}");
        n += 1;
    }
    name
}

/// The default literal of a schema's shape, kept inside its bounds.
pub fn placeholder(schema: &SchemaDoc) -> Expr {
    let kind = match schema {
        SchemaDoc::Boolean => ExprKind::Bool(false),
        SchemaDoc::Integer(r) => {
            let v = if r.contains(0.0) {
                0
            } else {
                r.min.or(r.max).unwrap_or(0.0) as i64
            };
            int_literal(v)
        }
        SchemaDoc::Number(r) => {
            if r.contains(0.0) {
                ExprKind::Int(0)
            } else {
                let v = r.min.or(r.max).unwrap_or(0.0);
                if v < 0.0 {
                    ExprKind::Unary(
                        super::ast::UnOp::Neg,
                        Box::new(Expr::bare(ExprKind::Num(-v))),
                    )
                } else {
                    ExprKind::Num(v)
                }
            }
        }
        SchemaDoc::String(None) => ExprKind::Str(String::new()),
        SchemaDoc::String(Some(values)) => {
            let first = if values.contains("") {
                String::new()
            } else {
                values.iter().next().cloned().unwrap_or_default()
            };
            ExprKind::Str(first)
        }
        SchemaDoc::Array { items, len } => {
            ExprKind::Array((0..len.lo()).map(|_| placeholder(items)).collect())
        }
        SchemaDoc::Object { properties, .. } => ExprKind::Object(
            properties
                .iter()
                .map(|(k, v)| (k.clone(), placeholder(v)))
                .collect(),
        ),
        SchemaDoc::Union(arms) => return placeholder(&arms[0]),
    };
    Expr::bare(kind)
}

fn int_literal(v: i64) -> ExprKind {
    if v < 0 {
        ExprKind::Unary(
            super::ast::UnOp::Neg,
            Box::new(Expr::bare(match v.checked_neg() {
                Some(p) => ExprKind::Int(p),
                None => ExprKind::Num(-(v as f64)),
            })),
        )
    } else {
        ExprKind::Int(v)
    }
}

/// JSON value of a placeholder, for editor previews.
pub fn placeholder_value(schema: &SchemaDoc) -> Value {
    let program = placeholder(schema);
    let typed = super::infer::infer_type(&program, &SchemaDoc::empty_object(), None)
        .expect("placeholders are well typed");
    super::eval::evaluate(&typed, &Value::Object(Default::default()))
        .expect("placeholders evaluate")
}
