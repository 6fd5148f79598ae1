//! The combined analysis result served to the editor and printed by
//! `edgeflow check --format json`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::check::{check_flow, function_signatures, Diagnostic, FunctionSignature};
use crate::expr::generate_skeleton;
use crate::flow::{FlowGraph, Registry};
use crate::risk::{risk_report, RiskReport};
use crate::taint::{propagate_labels, LabelMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateResponse {
    pub diagnostics: Vec<Diagnostic>,
    pub labels: LabelMap,
    pub risk: RiskReport,
    pub signatures: Vec<FunctionSignature>,
    /// Function node id → suggested body for its current signature.
    pub skeletons: BTreeMap<String, String>,
}

pub fn validate(flow: &FlowGraph, registry: &Registry) -> ValidateResponse {
    let diagnostics = check_flow(flow, registry);
    let labels = propagate_labels(flow, registry);
    let risk = risk_report(flow, registry, &labels, &diagnostics);
    let signatures = function_signatures(flow, registry);
    let skeletons = signatures
        .iter()
        .filter_map(|s| {
            let input = s.input.as_ref()?;
            Some((s.node.clone(), generate_skeleton(input, s.output.as_ref())))
        })
        .collect();
    ValidateResponse {
        diagnostics,
        labels,
        risk,
        signatures,
        skeletons,
    }
}

/// Canonical JSON, one trailing newline.
pub fn to_json(r: &ValidateResponse) -> String {
    pretty(r)
}

/// The JSON form shared by CLI output and server responses.
pub fn pretty<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}
