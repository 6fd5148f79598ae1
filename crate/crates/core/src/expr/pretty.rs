use std::fmt::Write;

use super::ast::{is_ident, Expr, ExprKind, UnOp};

const PREC_LOW: u8 = 0;
const PREC_UNARY: u8 = 6;
const PREC_POSTFIX: u8 = 7;

/// Render an expression so that parsing the text yields the same tree.
pub fn pretty_print(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, PREC_LOW);
    out
}

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Let(..) | ExprKind::If(..) => PREC_LOW,
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::Unary(..) => PREC_UNARY,
        _ => PREC_POSTFIX,
    }
}

fn write_expr(out: &mut String, e: &Expr, ctx: u8) {
    let wrap = precedence(e) < ctx;
    if wrap {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Bool(b) => write!(out, "{b}").unwrap(),
        ExprKind::Int(i) => write!(out, "{i}").unwrap(),
        ExprKind::Num(n) => write!(out, "{n:?}").unwrap(),
        ExprKind::Str(s) => write_str_lit(out, s),
        ExprKind::Msg => out.push_str("msg"),
        ExprKind::Var(v) => out.push_str(v),
        ExprKind::Field(base, name) => {
            write_expr(out, base, PREC_POSTFIX);
            out.push('.');
            write_key(out, name);
        }
        ExprKind::Let(name, value, body) => {
            write!(out, "let {name} = ").unwrap();
            write_expr(out, value, PREC_LOW);
            out.push_str(" in ");
            write_expr(out, body, PREC_LOW);
        }
        ExprKind::If(c, a, b) => {
            out.push_str("if ");
            write_expr(out, c, PREC_LOW);
            out.push_str(" then ");
            write_expr(out, a, PREC_LOW);
            out.push_str(" else ");
            write_expr(out, b, PREC_LOW);
        }
        ExprKind::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            write_expr(out, inner, PREC_UNARY);
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            let left_ctx = if op.is_comparison() { p + 1 } else { p };
            write_expr(out, l, left_ctx);
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(out, r, p + 1);
        }
        ExprKind::Object(fields) => {
            out.push('{');
            for (i, (k, v)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_key(out, k);
                out.push_str(": ");
                write_expr(out, v, PREC_LOW);
            }
            out.push('}');
        }
        ExprKind::Array(items) => {
            out.push('[');
            write_list(out, items);
            out.push(']');
        }
        ExprKind::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
    }
    if wrap {
        out.push(')');
    }
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, item, PREC_LOW);
    }
}

fn write_key(out: &mut String, key: &str) {
    if is_ident(key) {
        out.push_str(key);
    } else {
        write_str_lit(out, key);
    }
}

fn write_str_lit(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => write!(out, "\\u{{{:x}}}", c as u32).unwrap(),
            c => out.push(c),
        }
    }
    out.push('"');
}
