use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::schema::{SchemaDoc, ValueProfile};
use crate::taint::LabelTransfer;

use super::FlowError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Datasource,
    Processor,
    Output,
}

/// Runtime semantics a spec binds to. User-authored specs reuse these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    /// Emits mock data on every tick of its sampling period.
    Source,
    /// Runs an expression-language body over each message.
    Function,
    /// Projects object fields.
    Extract,
    /// Emits `true`/`false` when a numeric threshold predicate changes state.
    Trigger,
    /// Pairs the latest message from port `a` with the latest from port `b`.
    Combine,
    /// Flattens numeric leaves into a plottable series point.
    Chart,
    /// Accumulates received messages.
    Sink,
}

/// How a port's schema follows from the node's configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchemaSource {
    Fixed {
        schema: SchemaDoc,
    },
    /// Pick a schema by the string value of a config key.
    ConfigSelect {
        key: String,
        cases: BTreeMap<String, SchemaDoc>,
        default: SchemaDoc,
    },
    /// The config key holds a list of type references; several become a union.
    Accepts {
        key: String,
    },
    /// Like `accepts`, then keep only the object fields listed under `keep`.
    Projection {
        accepts: String,
        keep: String,
    },
    /// `{a, b}` object whose halves are the type references under two keys.
    Pair {
        a: String,
        b: String,
    },
    /// Determined by the surrounding wiring (function nodes).
    Contextual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortDecl {
    pub name: String,
    pub schema: SchemaSource,
    /// Output ports only. Absent means emit-nothing for datasources and
    /// plain passthrough for processors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelTransfer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spectrum {
    pub lo: u8,
    pub hi: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareFlags {
    #[serde(default)]
    pub insecure_hardware: bool,
}

/// Whether a risk factor applies, possibly depending on configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Effect {
    #[default]
    Never,
    Always,
    /// Applies when the boolean config key is `true`.
    WhenConfig(String),
}

impl Effect {
    pub fn applies(&self, config: &Value) -> bool {
        match self {
            Effect::Never => false,
            Effect::Always => true,
            Effect::WhenConfig(key) => config.get(key).and_then(Value::as_bool).unwrap_or(false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Effects {
    #[serde(default)]
    pub exports_off_box: Effect,
    #[serde(default)]
    pub physical_actuation: Effect,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextHelp {
    #[serde(default)]
    pub prose: String,
    #[serde(default)]
    pub profiles: Vec<ValueProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub role: Role,
    #[serde(default)]
    pub description: String,
    pub behavior: Behavior,
    pub config: SchemaDoc,
    #[serde(default)]
    pub inputs: Vec<PortDecl>,
    #[serde(default)]
    pub outputs: Vec<PortDecl>,
    pub risk: Spectrum,
    #[serde(default)]
    pub hardware: HardwareFlags,
    #[serde(default)]
    pub effects: Effects,
    #[serde(default)]
    pub help: ContextHelp,
    /// Offered sampling periods in milliseconds (datasources).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity: Option<Vec<u64>>,
}

impl NodeSpec {
    pub fn input(&self, name: &str) -> Option<&PortDecl> {
        self.inputs.iter().find(|p| p.name == name)
    }

    pub fn output(&self, name: &str) -> Option<&PortDecl> {
        self.outputs.iter().find(|p| p.name == name)
    }

    pub fn profile(&self, name: &str) -> Option<&ValueProfile> {
        self.help.profiles.iter().find(|p| p.name == name)
    }

    /// Check every structural invariant of the spec.
    pub fn validate(&self) -> Result<(), FlowError> {
        let invalid = |reason: String| FlowError::InvalidSpec {
            spec: self.id.clone(),
            reason,
        };
        if self.id.is_empty() {
            return Err(invalid("empty spec id".into()));
        }
        if self.risk.lo > self.risk.hi || self.risk.hi > 5 {
            return Err(invalid(format!(
                "risk spectrum [{}, {}] must satisfy lo <= hi <= 5",
                self.risk.lo, self.risk.hi
            )));
        }
        match self.role {
            Role::Datasource if !self.inputs.is_empty() => {
                return Err(invalid("datasources take no input ports".into()))
            }
            Role::Output if !self.outputs.is_empty() => {
                return Err(invalid("outputs have no output ports".into()))
            }
            _ => {}
        }
        self.config
            .check()
            .map_err(|e| invalid(format!("config schema: {e}")))?;
        let config_keys: Vec<&String> = match &self.config {
            SchemaDoc::Object { properties, .. } => properties.keys().collect(),
            _ => Vec::new(),
        };
        let has_key = |k: &String| config_keys.contains(&k);
        let mut seen = std::collections::BTreeSet::new();
        for (dir, ports) in [("input", &self.inputs), ("output", &self.outputs)] {
            for port in ports {
                if !seen.insert((dir, port.name.as_str())) {
                    return Err(invalid(format!("duplicate {dir} port `{}`", port.name)));
                }
                if dir == "input" && port.labels.is_some() {
                    return Err(invalid(format!("input port `{}` declares labels", port.name)));
                }
                if let Some(t) = &port.labels {
                    t.validate().map_err(invalid)?;
                }
                let keys: Vec<&String> = match &port.schema {
                    SchemaSource::Fixed { schema } => {
                        schema.check().map_err(|e| invalid(e.to_string()))?;
                        vec![]
                    }
                    SchemaSource::ConfigSelect {
                        key,
                        cases,
                        default,
                    } => {
                        for s in cases.values().chain(std::iter::once(default)) {
                            s.check().map_err(|e| invalid(e.to_string()))?;
                        }
                        vec![key]
                    }
                    SchemaSource::Accepts { key } => vec![key],
                    SchemaSource::Projection { accepts, keep } => vec![accepts, keep],
                    SchemaSource::Pair { a, b } => vec![a, b],
                    SchemaSource::Contextual => vec![],
                };
                if let Some(k) = keys.into_iter().find(|k| !has_key(k)) {
                    return Err(invalid(format!(
                        "port `{}` reads undeclared config key `{k}`",
                        port.name
                    )));
                }
            }
        }
        for profile in &self.help.profiles {
            let fits = self.outputs.iter().any(|port| {
                candidate_schemas(&port.schema)
                    .iter()
                    .any(|s| profile.check_contained(s).is_ok())
            });
            if !fits {
                return Err(invalid(format!(
                    "profile `{}` does not fit any output schema",
                    profile.name
                )));
            }
        }
        Ok(())
    }
}

/// Every concrete schema a statically known port source can take.
fn candidate_schemas(source: &SchemaSource) -> Vec<SchemaDoc> {
    match source {
        SchemaSource::Fixed { schema } => vec![schema.clone()],
        SchemaSource::ConfigSelect { cases, default, .. } => {
            cases.values().chain(std::iter::once(default)).cloned().collect()
        }
        _ => vec![],
    }
}

/// A reference to catalog shapes inside a node configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum TypeRef {
    Shape {
        shape: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fields: Option<Vec<String>>,
    },
    Pair {
        a: Box<TypeRef>,
        b: Box<TypeRef>,
    },
}

impl TypeRef {
    pub fn shape(name: &str) -> Self {
        TypeRef::Shape {
            shape: name.into(),
            fields: None,
        }
    }

    pub fn resolve(&self, shapes: &BTreeMap<String, SchemaDoc>) -> Result<SchemaDoc, FlowError> {
        match self {
            TypeRef::Shape { shape, fields } => {
                let base = shapes
                    .get(shape)
                    .ok_or_else(|| FlowError::UnknownShape(shape.clone()))?;
                Ok(match fields {
                    Some(keep) => project(base, keep),
                    None => base.clone(),
                })
            }
            TypeRef::Pair { a, b } => Ok(SchemaDoc::object([
                ("a", a.resolve(shapes)?),
                ("b", b.resolve(shapes)?),
            ])),
        }
    }
}

/// Keep only the listed object properties; non-object arms pass unchanged.
pub fn project(schema: &SchemaDoc, keep: &[String]) -> SchemaDoc {
    match schema {
        SchemaDoc::Object {
            properties,
            required,
        } => SchemaDoc::Object {
            properties: properties
                .iter()
                .filter(|(k, _)| keep.contains(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            required: required.iter().filter(|k| keep.contains(k)).cloned().collect(),
        },
        SchemaDoc::Union(arms) => SchemaDoc::Union(arms.iter().map(|a| project(a, keep)).collect()),
        other => other.clone(),
    }
}

/// Schema of a `TypeRef` list (single entry, or union of several).
pub fn resolve_refs(
    value: Option<&Value>,
    shapes: &BTreeMap<String, SchemaDoc>,
) -> Result<SchemaDoc, FlowError> {
    let value = value.ok_or_else(|| FlowError::BadTypeRef("missing type reference".into()))?;
    let refs: Vec<TypeRef> = match value {
        Value::Array(_) => serde_json::from_value(value.clone()),
        _ => serde_json::from_value(value.clone()).map(|r| vec![r]),
    }
    .map_err(|e| FlowError::BadTypeRef(e.to_string()))?;
    let mut arms = refs
        .iter()
        .map(|r| r.resolve(shapes))
        .collect::<Result<Vec<_>, _>>()?;
    match arms.len() {
        0 => Err(FlowError::BadTypeRef("empty type reference list".into())),
        1 => Ok(arms.pop().expect("one arm")),
        _ => Ok(SchemaDoc::Union(arms)),
    }
}

/// Config-schema fragment describing one type reference.
pub fn type_ref_schema(shape_names: &[&str]) -> SchemaDoc {
    let leaf = SchemaDoc::object_with(
        [
            ("shape", SchemaDoc::string_enum(shape_names.iter().copied())),
            ("fields", SchemaDoc::array(SchemaDoc::string())),
        ],
        ["shape"],
    );
    SchemaDoc::union(vec![
        leaf.clone(),
        SchemaDoc::object([("a", leaf.clone()), ("b", leaf)]),
    ])
}

/// Config-schema fragment for a non-empty list of type references.
pub fn type_ref_list_schema(shape_names: &[&str]) -> SchemaDoc {
    SchemaDoc::array_len(type_ref_schema(shape_names), Some(1), Some(4))
}
