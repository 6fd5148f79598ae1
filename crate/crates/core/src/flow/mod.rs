//! Flow graphs: node specifications, the spec registry, node instances,
//! wires, the flow file format and config-to-schema resolution.

mod edit;
mod spec;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::schema::{validate_value, SchemaDoc};

pub use edit::{apply_edit, ChangeSet, FlowEdit};
pub use spec::{
    project, resolve_refs, type_ref_list_schema, type_ref_schema, Behavior, ContextHelp, Effect,
    Effects, HardwareFlags, NodeSpec, PortDecl, Role, SchemaSource, Spectrum, TypeRef,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("spec `{0}` is already registered")]
    DuplicateSpec(String),
    #[error("invalid spec `{spec}`: {reason}")]
    InvalidSpec { spec: String, reason: String },
    #[error("node `{node}` uses unknown spec `{spec}`")]
    UnknownSpec { node: String, spec: String },
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` has no {direction} port `{port}`")]
    UnknownPort {
        node: String,
        port: String,
        direction: Direction,
    },
    #[error("port `{port}` of node `{node}` is typed by its wiring")]
    ContextualPort { node: String, port: String },
    #[error("wire {wire}: {reason}")]
    DanglingWire { wire: Wire, reason: String },
    #[error("wire {0} already exists")]
    DuplicateWire(Wire),
    #[error("wire {0} does not exist")]
    MissingWire(Wire),
    #[error("node `{node}` config is invalid at {}", paths.join(", "))]
    BadConfig { node: String, paths: Vec<String> },
    #[error("unknown shape `{0}`")]
    UnknownShape(String),
    #[error("bad type reference: {0}")]
    BadTypeRef(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl FlowError {
    /// Where in the document the error sits, for editor highlighting.
    pub fn location(&self) -> Value {
        match self {
            FlowError::Parse { line, column, .. } => {
                serde_json::json!({"line": line, "col": column})
            }
            FlowError::UnknownSpec { node, .. }
            | FlowError::BadConfig { node, .. }
            | FlowError::ContextualPort { node, .. } => serde_json::json!({ "node": node }),
            FlowError::UnknownPort { node, port, .. } => {
                serde_json::json!({"node": node, "port": port})
            }
            FlowError::DuplicateNode(n) | FlowError::UnknownNode(n) => {
                serde_json::json!({ "node": n })
            }
            FlowError::DanglingWire { wire, .. }
            | FlowError::DuplicateWire(wire)
            | FlowError::MissingWire(wire) => serde_json::json!({ "wire": wire }),
            _ => Value::Null,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "input",
            Direction::Out => "output",
        })
    }
}

/// Spec registry plus the shape catalog that type references resolve against.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    pub shapes: BTreeMap<String, SchemaDoc>,
    #[serde(with = "spec_list")]
    specs: BTreeMap<String, NodeSpec>,
}

mod spec_list {
    use super::NodeSpec;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, NodeSpec>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, NodeSpec>, D::Error> {
        let v = Vec::<NodeSpec>::deserialize(d)?;
        Ok(v.into_iter().map(|s| (s.id.clone(), s)).collect())
    }
}

impl Registry {
    pub fn new(shapes: BTreeMap<String, SchemaDoc>) -> Self {
        Registry {
            shapes,
            specs: BTreeMap::new(),
        }
    }

    pub fn register_nodespec(&mut self, spec: NodeSpec) -> Result<(), FlowError> {
        if self.specs.contains_key(&spec.id) {
            return Err(FlowError::DuplicateSpec(spec.id));
        }
        spec.validate()?;
        self.specs.insert(spec.id.clone(), spec);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&NodeSpec> {
        self.specs.get(id)
    }

    pub fn specs(&self) -> impl Iterator<Item = &NodeSpec> {
        self.specs.values()
    }

    /// Register every `*.json` nodespec file in `dir` (sorted by file name).
    pub fn load_dir(&mut self, dir: &Path) -> Result<usize, FlowError> {
        let io = |e: std::io::Error| FlowError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        };
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for path in &files {
            let text = std::fs::read_to_string(path).map_err(io)?;
            let spec: NodeSpec = serde_json::from_str(&text).map_err(|e| FlowError::Parse {
                line: e.line(),
                column: e.column(),
                message: format!("{}: {e}", path.display()),
            })?;
            self.register_nodespec(spec)?;
        }
        Ok(files.len())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("registry serialization is infallible")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeInstance {
    pub spec: String,
    #[serde(default = "empty_config")]
    pub config: Value,
}

fn empty_config() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(String, String)", into = "(String, String)")]
pub struct Endpoint {
    pub node: String,
    pub port: String,
}

impl From<(String, String)> for Endpoint {
    fn from((node, port): (String, String)) -> Self {
        Endpoint { node, port }
    }
}

impl From<Endpoint> for (String, String) {
    fn from(e: Endpoint) -> Self {
        (e.node, e.port)
    }
}

/// A directed connection. Ordering is (source, sport, target, tport).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wire {
    pub from: Endpoint,
    pub to: Endpoint,
}

impl Wire {
    pub fn new(from: (&str, &str), to: (&str, &str)) -> Self {
        Wire {
            from: Endpoint {
                node: from.0.into(),
                port: from.1.into(),
            },
            to: Endpoint {
                node: to.0.into(),
                port: to.1.into(),
            },
        }
    }
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{} -> {}:{}",
            self.from.node, self.from.port, self.to.node, self.to.port
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowMeta {
    #[serde(default)]
    pub author: String,
    #[serde(default)]
    pub description: String,
}

/// An immutable flow snapshot. Edits produce new snapshots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowGraph {
    pub id: String,
    pub name: String,
    pub version: String,
    pub meta: FlowMeta,
    pub nodes: BTreeMap<String, NodeInstance>,
    pub wires: BTreeSet<Wire>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowFile {
    id: String,
    name: String,
    version: String,
    #[serde(default)]
    meta: FlowMeta,
    #[serde(default)]
    nodes: Vec<NodeEntry>,
    #[serde(default)]
    wires: Vec<Wire>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    id: String,
    spec: String,
    #[serde(default = "empty_config")]
    config: Value,
}

impl FlowGraph {
    pub fn new(id: &str, name: &str) -> Self {
        FlowGraph {
            id: id.into(),
            name: name.into(),
            version: "1.0.0".into(),
            ..Default::default()
        }
    }

    pub fn incoming<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Wire> + 'a {
        self.wires.iter().filter(move |w| w.to.node == node)
    }

    pub fn outgoing<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Wire> + 'a {
        self.wires.iter().filter(move |w| w.from.node == node)
    }

    pub fn successors(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> =
            self.nodes.keys().map(|k| (k.as_str(), BTreeSet::new())).collect();
        for w in &self.wires {
            out.entry(w.from.node.as_str())
                .or_default()
                .insert(w.to.node.as_str());
        }
        out
    }

    /// Every node reachable from `starts` along wires, including the starts.
    pub fn downstream<'a, I>(&'a self, starts: I) -> BTreeSet<String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let succ = self.successors();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        for s in starts {
            if self.nodes.contains_key(s) && seen.insert(s.to_string()) {
                queue.push_back(s);
            }
        }
        while let Some(n) = queue.pop_front() {
            for &m in succ.get(n).into_iter().flatten() {
                if seen.insert(m.to_string()) {
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    /// Structural validation against `registry`.
    pub fn validate(&self, registry: &Registry) -> Result<(), FlowError> {
        for (id, node) in &self.nodes {
            validate_node(id, node, registry)?;
        }
        for w in &self.wires {
            validate_wire(self, w, registry)?;
        }
        Ok(())
    }
}

pub(crate) fn validate_node(id: &str, node: &NodeInstance, registry: &Registry) -> Result<(), FlowError> {
    let spec = registry.get(&node.spec).ok_or_else(|| FlowError::UnknownSpec {
        node: id.into(),
        spec: node.spec.clone(),
    })?;
    let v = validate_value(&node.config, &spec.config).map_err(|e| FlowError::InvalidSpec {
        spec: spec.id.clone(),
        reason: e.to_string(),
    })?;
    if !v.valid {
        return Err(FlowError::BadConfig {
            node: id.into(),
            paths: v.violations.into_iter().map(|x| x.path).collect(),
        });
    }
    Ok(())
}

pub(crate) fn validate_wire(flow: &FlowGraph, w: &Wire, registry: &Registry) -> Result<(), FlowError> {
    let dangling = |reason: String| FlowError::DanglingWire {
        wire: w.clone(),
        reason,
    };
    let src = flow
        .nodes
        .get(&w.from.node)
        .ok_or_else(|| dangling(format!("unknown source node `{}`", w.from.node)))?;
    let dst = flow
        .nodes
        .get(&w.to.node)
        .ok_or_else(|| dangling(format!("unknown target node `{}`", w.to.node)))?;
    let spec_of = |n: &NodeInstance| registry.get(&n.spec);
    if spec_of(src).and_then(|s| s.output(&w.from.port)).is_none() {
        return Err(dangling(format!(
            "`{}` has no output port `{}`",
            w.from.node, w.from.port
        )));
    }
    if spec_of(dst).and_then(|s| s.input(&w.to.port)).is_none() {
        return Err(dangling(format!(
            "`{}` has no input port `{}`",
            w.to.node, w.to.port
        )));
    }
    Ok(())
}

/// Parse and structurally validate a flow document.
pub fn load_flow(document: &[u8], registry: &Registry) -> Result<FlowGraph, FlowError> {
    let file: FlowFile = serde_json::from_slice(document).map_err(|e| FlowError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut nodes = BTreeMap::new();
    for entry in file.nodes {
        if nodes.contains_key(&entry.id) {
            return Err(FlowError::DuplicateNode(entry.id));
        }
        let inst = NodeInstance {
            spec: entry.spec,
            config: entry.config,
        };
        validate_node(&entry.id, &inst, registry)?;
        nodes.insert(entry.id, inst);
    }
    let mut flow = FlowGraph {
        id: file.id,
        name: file.name,
        version: file.version,
        meta: file.meta,
        nodes,
        wires: BTreeSet::new(),
    };
    for w in file.wires {
        validate_wire(&flow, &w, registry)?;
        if flow.wires.contains(&w) {
            return Err(FlowError::DuplicateWire(w));
        }
        flow.wires.insert(w);
    }
    Ok(flow)
}

/// Canonical flow file bytes: nodes by id, wires in wire order, sorted config keys.
pub fn save_flow(flow: &FlowGraph) -> Vec<u8> {
    let file = FlowFile {
        id: flow.id.clone(),
        name: flow.name.clone(),
        version: flow.version.clone(),
        meta: flow.meta.clone(),
        nodes: flow
            .nodes
            .iter()
            .map(|(id, n)| NodeEntry {
                id: id.clone(),
                spec: n.spec.clone(),
                config: n.config.clone(),
            })
            .collect(),
        wires: flow.wires.iter().cloned().collect(),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("flow serialization is infallible");
    out.push(b'\n');
    out
}

/// The schema a port carries under the node's current configuration.
pub fn resolve_port_schema(
    registry: &Registry,
    node_id: &str,
    node: &NodeInstance,
    port: &str,
    direction: Direction,
) -> Result<SchemaDoc, FlowError> {
    let spec = registry.get(&node.spec).ok_or_else(|| FlowError::UnknownSpec {
        node: node_id.into(),
        spec: node.spec.clone(),
    })?;
    let decl = match direction {
        Direction::In => spec.input(port),
        Direction::Out => spec.output(port),
    }
    .ok_or_else(|| FlowError::UnknownPort {
        node: node_id.into(),
        port: port.into(),
        direction,
    })?;
    let config = &node.config;
    let shapes = &registry.shapes;
    match &decl.schema {
        SchemaSource::Fixed { schema } => Ok(schema.clone()),
        SchemaSource::ConfigSelect {
            key,
            cases,
            default,
        } => Ok(config
            .get(key)
            .and_then(Value::as_str)
            .and_then(|v| cases.get(v))
            .unwrap_or(default)
            .clone()),
        SchemaSource::Accepts { key } => resolve_refs(config.get(key), shapes),
        SchemaSource::Projection { accepts, keep } => {
            let base = resolve_refs(config.get(accepts), shapes)?;
            Ok(match config.get(keep).and_then(Value::as_array) {
                Some(list) => {
                    let keep: Vec<String> = list
                        .iter()
                        .filter_map(|v| v.as_str().map(str::to_string))
                        .collect();
                    project(&base, &keep)
                }
                None => base,
            })
        }
        SchemaSource::Pair { a, b } => Ok(SchemaDoc::object([
            ("a", resolve_refs(config.get(a), shapes)?),
            ("b", resolve_refs(config.get(b), shapes)?),
        ])),
        SchemaSource::Contextual => Err(FlowError::ContextualPort {
            node: node_id.into(),
            port: port.into(),
        }),
    }
}
