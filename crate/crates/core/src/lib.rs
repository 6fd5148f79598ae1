//! Core of the edgeflow toolkit.
//!
//! Apps are flow graphs of datasource, processor and output nodes. Every
//! port carries a [`SchemaDoc`]; the toolkit checks wires statically,
//! propagates personal-data labels, scores risk, builds manifests and runs
//! flows deterministically while recording message provenance.

pub mod check;
pub mod expr;
pub mod flow;
pub mod library;
pub mod manifest;
pub mod report;
pub mod risk;
pub mod runtime;
pub mod schema;
pub mod taint;

pub use library::builtin_specs;
pub use check::{check_flow, function_signature, recheck_after_edit, Diagnostic, Severity};
pub use flow::{apply_edit, load_flow, save_flow, FlowEdit, FlowGraph, NodeSpec, Registry, Role};
pub use schema::{generate_value, is_subtype, validate_value, Compat, SchemaDoc, ValueProfile};
pub use taint::{propagate_labels, LabelMap, PersonalAtom, PersonalLabel};

/// Structured values flowing through ports and configs.
pub type Value = serde_json::Value;
