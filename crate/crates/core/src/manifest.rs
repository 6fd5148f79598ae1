//! App manifests: a layered notice of what an app reads, where data goes,
//! which personal data is involved, its risk and the statutory details a
//! data controller must supply.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::flow::{FlowGraph, Registry, Role};
use crate::library::period_ms;
use crate::risk::RiskReport;
use crate::taint::{node_transfer, summarize_personal_data, LabelMap, PersonalLabel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppIdentity {
    pub id: String,
    pub name: String,
    pub version: String,
    pub author: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasourceEntry {
    pub node: String,
    pub spec: String,
    pub purpose: String,
    /// Configured sampling period in ms, if the source is periodic.
    pub granularity: Option<u64>,
    pub granularity_options: Vec<u64>,
    pub atoms: PersonalLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportEntry {
    pub node: String,
    pub destination: String,
    pub atoms: PersonalLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuationEntry {
    pub node: String,
    pub device: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Statutory {
    #[serde(default)]
    pub controller: String,
    #[serde(default)]
    pub purpose: String,
    #[serde(default)]
    pub retention: String,
    #[serde(default)]
    pub rights: String,
}

impl Statutory {
    /// Names of the empty fields.
    pub fn missing(&self) -> Vec<String> {
        [
            ("controller", &self.controller),
            ("purpose", &self.purpose),
            ("retention", &self.retention),
            ("rights", &self.rights),
        ]
        .into_iter()
        .filter(|(_, v)| v.trim().is_empty())
        .map(|(k, _)| k.to_string())
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layers {
    pub summary: String,
    pub detail: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub app: AppIdentity,
    pub description: String,
    pub benefits: String,
    pub datasources: Vec<DatasourceEntry>,
    pub exports: Vec<ExportEntry>,
    pub actuations: Vec<ActuationEntry>,
    pub risk: RiskReport,
    pub statutory: Statutory,
    pub layers: Layers,
}

/// Developer-supplied prose and statutory details.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestMeta {
    /// Falls back to the flow's meta description.
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub benefits: String,
    /// Datasource node id → why it is read. Defaults to the spec description.
    #[serde(default)]
    pub purposes: BTreeMap<String, String>,
    #[serde(default)]
    pub statutory: Statutory,
}

#[derive(Debug, Error, PartialEq)]
pub enum ManifestError {
    #[error("missing statutory field(s): {}", .0.join(", "))]
    MissingStatutoryField(Vec<String>),
    #[error("parse error at {line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
}

impl ManifestError {
    pub fn code(&self) -> &'static str {
        match self {
            ManifestError::MissingStatutoryField(_) => "missing-statutory-field",
            ManifestError::Parse { .. } => "parse-error",
        }
    }
}

fn config_str(config: &Value, key: &str) -> String {
    config.get(key).and_then(Value::as_str).unwrap_or_default().to_string()
}

fn atom_list(label: &PersonalLabel) -> String {
    if label.is_empty() {
        return "no personal data".into();
    }
    let tags: Vec<String> = label
        .iter()
        .map(|a| format!("{} {}", a.category.name(), a.tag))
        .collect();
    tags.join(", ")
}

pub fn build_manifest(
    flow: &FlowGraph,
    registry: &Registry,
    labels: &LabelMap,
    risk: &RiskReport,
    meta: &ManifestMeta,
) -> Result<Manifest, ManifestError> {
    let missing = meta.statutory.missing();
    if !missing.is_empty() {
        return Err(ManifestError::MissingStatutoryField(missing));
    }
    let summary = summarize_personal_data(flow, registry, labels);
    let mut datasources = Vec::new();
    let mut exports = Vec::new();
    let mut actuations = Vec::new();
    for (id, inst) in &flow.nodes {
        let Some(spec) = registry.get(&inst.spec) else { continue };
        match spec.role {
            Role::Datasource => {
                let atoms = node_transfer(spec, &inst.config, &PersonalLabel::new())
                    .into_values()
                    .flatten()
                    .collect();
                datasources.push(DatasourceEntry {
                    node: id.clone(),
                    spec: spec.id.clone(),
                    purpose: meta
                        .purposes
                        .get(id)
                        .cloned()
                        .unwrap_or_else(|| spec.description.clone()),
                    granularity: spec.granularity.as_ref().map(|_| period_ms(&inst.config)),
                    granularity_options: spec.granularity.clone().unwrap_or_default(),
                    atoms,
                });
            }
            Role::Output => {
                if let Some(atoms) = summary.exports.get(id) {
                    exports.push(ExportEntry {
                        node: id.clone(),
                        destination: config_str(&inst.config, "destination"),
                        atoms: atoms.clone(),
                    });
                }
                if spec.effects.physical_actuation.applies(&inst.config) {
                    actuations.push(ActuationEntry {
                        node: id.clone(),
                        device: config_str(&inst.config, "device"),
                    });
                }
            }
            Role::Processor => {}
        }
    }
    let yes_no = if exports.is_empty() { "no" } else { "yes" };
    let layer_one = format!(
        "{} reads {} data source(s), sends data off-box: {}, risk: {}.",
        flow.name,
        datasources.len(),
        yes_no,
        risk.app.band
    );
    let mut detail = Vec::new();
    for d in &datasources {
        let rate = match d.granularity {
            Some(ms) => format!(" every {ms} ms"),
            None => String::new(),
        };
        detail.push(format!(
            "Reads {} ({}){}: {}. Personal data: {}.",
            d.node,
            d.spec,
            rate,
            d.purpose,
            atom_list(&d.atoms)
        ));
    }
    for e in &exports {
        detail.push(format!(
            "Sends data off the box via {} to {}. Personal data: {}.",
            e.node,
            e.destination,
            atom_list(&e.atoms)
        ));
    }
    for a in &actuations {
        detail.push(format!("Controls {} via {}.", a.device, a.node));
    }
    detail.push(format!("Overall risk {} of 5 ({}).", risk.app.score, risk.app.band));
    let description = if meta.description.is_empty() {
        flow.meta.description.clone()
    } else {
        meta.description.clone()
    };
    Ok(Manifest {
        app: AppIdentity {
            id: flow.id.clone(),
            name: flow.name.clone(),
            version: flow.version.clone(),
            author: flow.meta.author.clone(),
        },
        description,
        benefits: meta.benefits.clone(),
        datasources,
        exports,
        actuations,
        risk: risk.clone(),
        statutory: meta.statutory.clone(),
        layers: Layers {
            summary: layer_one,
            detail,
        },
    })
}

/// Canonical bytes: two-space indented JSON in declaration order, LF, with
/// a trailing newline.
pub fn serialize_manifest(m: &Manifest) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(m).expect("manifest serializes");
    out.push(b'\n');
    out
}

pub fn parse_manifest(bytes: &[u8]) -> Result<Manifest, ManifestError> {
    let m: Manifest = serde_json::from_slice(bytes).map_err(|e| ManifestError::Parse {
        line: e.line(),
        col: e.column(),
        message: e.to_string(),
    })?;
    let missing = m.statutory.missing();
    if !missing.is_empty() {
        return Err(ManifestError::MissingStatutoryField(missing));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_flow;
    use crate::flow::load_flow;
    use crate::library::builtin_specs;
    use crate::risk::risk_report;
    use crate::taint::{propagate_labels, Category};

    fn fixture_path(name: &str) -> String {
        format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn meta() -> ManifestMeta {
        let text = std::fs::read(fixture_path("battery_chart.meta.json")).unwrap();
        serde_json::from_slice(&text).unwrap()
    }

    fn manifest_for(name: &str, meta: &ManifestMeta) -> Result<Manifest, ManifestError> {
        let reg = builtin_specs();
        let bytes = std::fs::read(fixture_path(&format!("{name}.json"))).unwrap();
        let flow = load_flow(&bytes, &reg).unwrap();
        let labels = propagate_labels(&flow, &reg);
        let risk = risk_report(&flow, &reg, &labels, &check_flow(&flow, &reg));
        build_manifest(&flow, &reg, &labels, &risk, meta)
    }

    #[test]
    fn battery_chart_manifest() {
        let m = manifest_for("battery_chart", &meta()).unwrap();
        assert_eq!(m.datasources.len(), 1);
        assert_eq!(m.datasources[0].spec, "smartphone");
        assert_eq!(m.datasources[0].granularity, Some(1000));
        assert!(m.exports.is_empty() && m.actuations.is_empty());
        assert_eq!(
            m.layers.summary,
            "Battery chart reads 1 data source(s), sends data off-box: no, risk: low."
        );
    }

    #[test]
    fn golden_manifest() {
        let bytes = serialize_manifest(&manifest_for("battery_chart", &meta()).unwrap());
        let golden = fixture_path("battery_chart.manifest.json");
        if std::env::var_os("EDGEFLOW_BLESS").is_some() {
            std::fs::write(&golden, &bytes).unwrap();
        }
        assert_eq!(String::from_utf8(bytes).unwrap(), std::fs::read_to_string(golden).unwrap());
    }

    #[test]
    fn missing_retention() {
        let mut meta = meta();
        meta.statutory.retention.clear();
        let err = manifest_for("battery_chart", &meta).unwrap_err();
        assert_eq!(err, ManifestError::MissingStatutoryField(vec!["retention".into()]));
        assert_eq!(err.code(), "missing-statutory-field");
    }

    #[test]
    fn export_carries_identifier_atoms() {
        let m = manifest_for("mood_motion", &meta()).unwrap();
        assert_eq!(m.exports.len(), 1);
        assert!(m.exports[0].atoms.iter().any(|a| a.category == Category::Identifier));
        assert!(m.layers.summary.contains("sends data off-box: yes, risk: high"));
    }

    #[test]
    fn round_trip_and_truncation() {
        for name in ["battery_chart", "mood_motion", "threshold", "chain"] {
            let m = manifest_for(name, &meta()).unwrap();
            let bytes = serialize_manifest(&m);
            let back = parse_manifest(&bytes).unwrap();
            assert_eq!(back, m);
            assert_eq!(serialize_manifest(&back), bytes);
            let cut = &bytes[..bytes.len() / 2];
            assert_eq!(parse_manifest(cut).unwrap_err().code(), "parse-error");
        }
    }
}
