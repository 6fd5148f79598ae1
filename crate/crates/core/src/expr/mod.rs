//! The function-node language.
//!
//! A small, total expression language: literals, `msg` field access, `let`,
//! `if`, arithmetic, comparisons, boolean connectives, object and array
//! literals and a handful of built-ins. Programs are type-checked against
//! the schemas of the wires around a function node and evaluated
//! deterministically. Integer arithmetic is checked and never wraps.
//!
//! ```text
//! let lux = msg.lux in
//! if lux > 1000 then {level: "bright", lux: lux} else {level: "dim", lux: lux}
//! ```

mod ast;
mod eval;
mod infer;
mod lexer;
mod parser;
mod pretty;
mod skeleton;
mod types;

use serde::{Deserialize, Serialize};

pub use ast::{is_ident, BinOp, Builtin, Expr, ExprKind, Span, UnOp};
pub use eval::{evaluate, EvalError};
pub use infer::{infer_type, TypedProgram};
pub use parser::parse;
pub use pretty::pretty_print;
pub use skeleton::{generate_skeleton, placeholder, placeholder_value};
pub use types::{is_subtype, join, schema_to_type, type_to_schema, unify, ExprType, FieldType};

use crate::schema::SchemaDoc;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExprDiagnostic {
    pub line: usize,
    pub col: usize,
    pub code: String,
    pub message: String,
}

impl ExprDiagnostic {
    pub fn new(span: Span, code: &str, message: String) -> Self {
        ExprDiagnostic {
            line: span.line,
            col: span.col,
            code: code.into(),
            message,
        }
    }
}

impl std::fmt::Display for ExprDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {} [{}]", self.line, self.col, self.message, self.code)
    }
}

/// Parse and type-check in one step.
pub fn compile(
    source: &str,
    input: &SchemaDoc,
    expected: Option<&SchemaDoc>,
) -> Result<TypedProgram, Vec<ExprDiagnostic>> {
    let program = parse(source).map_err(|d| vec![d])?;
    infer_type(&program, input, expected)
}
