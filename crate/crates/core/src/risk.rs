//! Risk scoring on a 0–5 scale.
//!
//! Each node spec declares a spectrum `[lo, hi]`. Configuration-triggered
//! factors raise the effective score from `lo`: exporting off the box and
//! physical actuation add 2, insecure hardware and unverified code add 1,
//! and the result is clamped into the spectrum. The app score is the
//! maximum node score, raised by one when an exporting node receives
//! sensitive or identifier data.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::check::{Diagnostic, Location, Severity};
use crate::flow::{Behavior, FlowGraph, NodeSpec, Registry, Spectrum};
use crate::taint::{Category, LabelMap};

pub const MAX_SCORE: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskFactors {
    pub exports_off_box: bool,
    pub physical_actuation: bool,
    pub insecure_hardware: bool,
    pub unverified_code: bool,
}

impl RiskFactors {
    /// Factors for a configured node. `unverified` says whether the node's
    /// function body has unresolved error diagnostics.
    pub fn of(spec: &NodeSpec, config: &serde_json::Value, unverified: bool) -> Self {
        RiskFactors {
            exports_off_box: spec.effects.exports_off_box.applies(config),
            physical_actuation: spec.effects.physical_actuation.applies(config),
            insecure_hardware: spec.hardware.insecure_hardware,
            unverified_code: spec.behavior == Behavior::Function && unverified,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Low,
    Medium,
    High,
}

impl Band {
    pub fn of(score: u8) -> Self {
        match score {
            0..=1 => Band::Low,
            2..=3 => Band::Medium,
            _ => Band::High,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Low => "low",
            Band::Medium => "medium",
            Band::High => "high",
        })
    }
}

pub fn node_risk(spectrum: Spectrum, factors: &RiskFactors) -> u8 {
    let raised = spectrum.lo
        + 2 * factors.exports_off_box as u8
        + 2 * factors.physical_actuation as u8
        + factors.insecure_hardware as u8
        + factors.unverified_code as u8;
    raised.clamp(spectrum.lo, spectrum.hi)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRisk {
    pub id: String,
    pub score: u8,
    pub spectrum: Spectrum,
    pub factors: RiskFactors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppRisk {
    pub score: u8,
    pub band: Band,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskReport {
    pub app: AppRisk,
    pub nodes: Vec<NodeRisk>,
}

/// Scores every node whose spec is known, in node id order.
pub fn assess_nodes(flow: &FlowGraph, registry: &Registry, diags: &[Diagnostic]) -> Vec<NodeRisk> {
    flow.nodes
        .iter()
        .filter_map(|(id, inst)| {
            let spec = registry.get(&inst.spec)?;
            let unverified = diags.iter().any(|d| {
                d.severity == Severity::Error
                    && !matches!(d.loc, Location::Wire { .. })
                    && d.loc.anchor() == id
            });
            let factors = RiskFactors::of(spec, &inst.config, unverified);
            Some(NodeRisk {
                id: id.clone(),
                score: node_risk(spec.risk, &factors),
                spectrum: spec.risk,
                factors,
            })
        })
        .collect()
}

pub fn app_risk(flow: &FlowGraph, labels: &LabelMap, nodes: Vec<NodeRisk>) -> RiskReport {
    let base = nodes.iter().map(|n| n.score).max().unwrap_or(0);
    let sensitive_export = nodes.iter().any(|n| {
        n.factors.exports_off_box
            && labels
                .input_label(flow, &n.id)
                .iter()
                .any(|a| matches!(a.category, Category::Sensitive | Category::Identifier))
    });
    let score = (base + sensitive_export as u8).min(MAX_SCORE);
    RiskReport {
        app: AppRisk {
            score,
            band: Band::of(score),
        },
        nodes,
    }
}

/// Node scores and app rating in one pass.
pub fn risk_report(
    flow: &FlowGraph,
    registry: &Registry,
    labels: &LabelMap,
    diags: &[Diagnostic],
) -> RiskReport {
    app_risk(flow, labels, assess_nodes(flow, registry, diags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_flow;
    use crate::flow::load_flow;
    use crate::library::builtin_specs;
    use crate::taint::propagate_labels;

    fn spectrum(lo: u8, hi: u8) -> Spectrum {
        Spectrum { lo, hi }
    }

    fn factors(bits: u8) -> RiskFactors {
        RiskFactors {
            exports_off_box: bits & 1 != 0,
            physical_actuation: bits & 2 != 0,
            insecure_hardware: bits & 4 != 0,
            unverified_code: bits & 8 != 0,
        }
    }

    #[test]
    fn rule_table() {
        assert_eq!(node_risk(spectrum(1, 3), &factors(0)), 1);
        assert_eq!(node_risk(spectrum(1, 4), &factors(1)), 3);
        assert_eq!(node_risk(spectrum(0, 2), &factors(3)), 2);
        assert_eq!(node_risk(spectrum(0, 5), &factors(15)), 5);
        assert_eq!(node_risk(spectrum(2, 5), &factors(12)), 4);
    }

    #[test]
    fn monotone_in_every_factor() {
        for lo in 0..=MAX_SCORE {
            for hi in lo..=MAX_SCORE {
                for bits in 0..16u8 {
                    for extra in 0..4 {
                        let more = bits | (1 << extra);
                        let s = spectrum(lo, hi);
                        assert!(node_risk(s, &factors(more)) >= node_risk(s, &factors(bits)));
                    }
                }
            }
        }
    }

    #[test]
    fn bands() {
        let bands: Vec<Band> = (0..=5).map(Band::of).collect();
        use Band::*;
        assert_eq!(bands, [Low, Low, Medium, Medium, High, High]);
    }

    fn node(id: &str, score: u8, exports: bool) -> NodeRisk {
        NodeRisk {
            id: id.into(),
            score,
            spectrum: spectrum(0, 5),
            factors: RiskFactors {
                exports_off_box: exports,
                ..Default::default()
            },
        }
    }

    #[test]
    fn max_aggregation_and_empty_flow() {
        let flow = FlowGraph::new("x", "x");
        let nodes = vec![node("a", 1, false), node("b", 1, false), node("c", 3, false)];
        let r = app_risk(&flow, &LabelMap::default(), nodes);
        assert_eq!(r.app, AppRisk { score: 3, band: Band::Medium });
        let empty = app_risk(&flow, &LabelMap::default(), vec![]);
        assert_eq!(empty.app, AppRisk { score: 0, band: Band::Low });
    }

    #[test]
    fn identifier_export_escalates() {
        let reg = builtin_specs();
        let text = include_str!("../../../fixtures/mood_motion.json");
        let flow = load_flow(text.as_bytes(), &reg).unwrap();
        let labels = propagate_labels(&flow, &reg);
        let report = risk_report(&flow, &reg, &labels, &check_flow(&flow, &reg));
        let export = report.nodes.iter().find(|n| n.factors.exports_off_box).unwrap();
        assert_eq!(export.score, 3);
        let base = report.nodes.iter().map(|n| n.score).max().unwrap();
        assert_eq!(report.app.score, base + 1);
        assert_eq!(report.app.band, Band::High);

        let mut cut = flow.clone();
        cut.wires.retain(|w| w.from.node != "twitter");
        let labels = propagate_labels(&cut, &reg);
        let report = risk_report(&cut, &reg, &labels, &check_flow(&cut, &reg));
        assert_eq!(report.app.score, 3);
    }

    #[test]
    fn unverified_function_raises_score() {
        let reg = builtin_specs();
        let text = include_str!("../../../fixtures/function.json");
        let mut flow = load_flow(text.as_bytes(), &reg).unwrap();
        let clean = risk_report(&flow, &reg, &LabelMap::default(), &check_flow(&flow, &reg));
        flow.nodes.get_mut("is-bright").unwrap().config = serde_json::json!({"body": "msg.lux / \"x\""});
        let broken = risk_report(&flow, &reg, &LabelMap::default(), &check_flow(&flow, &reg));
        let score = |r: &RiskReport| r.nodes.iter().find(|n| n.id == "is-bright").unwrap().score;
        assert_eq!(score(&broken), score(&clean) + 1);
        assert!(broken.nodes.iter().find(|n| n.id == "is-bright").unwrap().factors.unverified_code);
    }

    #[test]
    fn report_json_shape() {
        let r = RiskReport {
            app: AppRisk { score: 1, band: Band::Low },
            nodes: vec![node("a", 1, false)],
        };
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["app"]["band"], "low");
        assert_eq!(v["nodes"][0]["spectrum"], serde_json::json!({"lo": 0, "hi": 5}));
        assert_eq!(serde_json::from_value::<RiskReport>(v).unwrap(), r);
    }
}
