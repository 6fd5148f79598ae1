//! Development-time checks over a flow: wire compatibility, function-node
//! signatures and bodies, unwired and unreachable nodes.
//!
//! Function nodes take their types from the wiring. The input signature is
//! the join of the producers feeding the node. The output signature is the
//! meet of the input schemas of the non-function nodes it feeds, or
//! unconstrained when there are none, in which case downstream nodes see
//! the schema of the inferred body type.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::expr::{self, type_to_schema, ExprDiagnostic};
use crate::flow::{
    resolve_port_schema, Behavior, ChangeSet, Direction, FlowGraph, NodeSpec, Registry, Role,
    Wire,
};
use crate::schema::{is_subtype, join, meet, Compat, SchemaDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

/// Where a diagnostic points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Location {
    Wire {
        wire: Wire,
    },
    Expr {
        node: String,
        line: usize,
        col: usize,
    },
    Port {
        node: String,
        port: String,
    },
    Node {
        node: String,
    },
}

impl Location {
    fn node(node: &str) -> Self {
        Location::Node { node: node.into() }
    }

    fn port(node: &str, port: &str) -> Self {
        Location::Port {
            node: node.into(),
            port: port.into(),
        }
    }

    /// The node a location belongs to; wires belong to their source.
    pub fn anchor(&self) -> &str {
        match self {
            Location::Wire { wire } => &wire.from.node,
            Location::Expr { node, .. } | Location::Port { node, .. } | Location::Node { node } => {
                node
            }
        }
    }

    /// Whether the location touches any node in `nodes`.
    pub fn touches(&self, nodes: &BTreeSet<String>) -> bool {
        match self {
            Location::Wire { wire } => {
                nodes.contains(&wire.from.node) || nodes.contains(&wire.to.node)
            }
            other => nodes.contains(other.anchor()),
        }
    }

    fn rank(&self) -> (u8, String, usize, usize) {
        match self {
            Location::Node { .. } => (0, String::new(), 0, 0),
            Location::Port { port, .. } => (1, port.clone(), 0, 0),
            Location::Expr { line, col, .. } => (2, String::new(), *line, *col),
            Location::Wire { wire } => (3, wire.to_string(), 0, 0),
        }
    }
}

impl Ord for Location {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.anchor(), self.rank()).cmp(&(other.anchor(), other.rank()))
    }
}

impl PartialOrd for Location {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Wire { wire } => write!(f, "{wire}"),
            Location::Expr { node, line, col } => write!(f, "{node}@{line}:{col}"),
            Location::Port { node, port } => write!(f, "{node}:{port}"),
            Location::Node { node } => f.write_str(node),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub loc: Location,
    pub message: String,
}

impl Ord for Diagnostic {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.loc, self.severity, &self.code, &self.message).cmp(&(
            &other.loc,
            other.severity,
            &other.code,
            &other.message,
        ))
    }
}

impl PartialOrd for Diagnostic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        };
        write!(f, "{sev}[{}] {}: {}", self.code, self.loc, self.message)
    }
}

fn diag(severity: Severity, code: &str, loc: Location, message: String) -> Diagnostic {
    Diagnostic {
        severity,
        code: code.into(),
        loc,
        message,
    }
}

/// One JSON object per line.
pub fn to_json_lines(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| serde_json::to_string(d).expect("diagnostics serialize") + "\n")
        .collect()
}

pub fn parse_json_lines(text: &str) -> Result<Vec<Diagnostic>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// The types a function node is checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSignature {
    pub node: String,
    /// `None` when producers conflict or cannot be typed.
    pub input: Option<SchemaDoc>,
    /// `None` when no non-function consumer constrains the result.
    pub output: Option<SchemaDoc>,
}

#[derive(Debug, Clone, PartialEq)]
enum Declared {
    Unconstrained,
    Schema(SchemaDoc),
    Unknown,
}

#[derive(Debug, Clone)]
struct FnInfo {
    input: Option<SchemaDoc>,
    declared: Declared,
    /// What downstream nodes receive.
    effective: Option<SchemaDoc>,
    diags: Vec<Diagnostic>,
}

struct Checker<'a> {
    flow: &'a FlowGraph,
    registry: &'a Registry,
    incoming: HashMap<&'a str, Vec<&'a Wire>>,
    outgoing: HashMap<&'a str, Vec<&'a Wire>>,
    cyclic: BTreeSet<String>,
    reachable: BTreeSet<String>,
    functions: HashMap<String, FnInfo>,
    inputs: HashMap<(String, String), Option<SchemaDoc>>,
    outputs: HashMap<(String, String), Option<SchemaDoc>>,
}

impl<'a> Checker<'a> {
    fn new(flow: &'a FlowGraph, registry: &'a Registry) -> Self {
        let mut incoming: HashMap<&str, Vec<&Wire>> = HashMap::new();
        let mut outgoing: HashMap<&str, Vec<&Wire>> = HashMap::new();
        for w in &flow.wires {
            incoming.entry(w.to.node.as_str()).or_default().push(w);
            outgoing.entry(w.from.node.as_str()).or_default().push(w);
        }
        let mut c = Checker {
            flow,
            registry,
            incoming,
            outgoing,
            cyclic: BTreeSet::new(),
            reachable: BTreeSet::new(),
            functions: HashMap::new(),
            inputs: HashMap::new(),
            outputs: HashMap::new(),
        };
        c.cyclic = c.function_cycles();
        let sources = flow
            .nodes
            .iter()
            .filter(|(_, n)| c.spec_of(&n.spec).is_some_and(|s| s.role == Role::Datasource))
            .map(|(id, _)| id.as_str());
        c.reachable = flow.downstream(sources);
        c
    }

    fn spec_of(&self, spec: &str) -> Option<&'a NodeSpec> {
        self.registry.get(spec)
    }

    fn spec(&self, node: &str) -> Option<&'a NodeSpec> {
        self.flow.nodes.get(node).and_then(|n| self.registry.get(&n.spec))
    }

    fn is_function(&self, node: &str) -> bool {
        self.spec(node).is_some_and(|s| s.behavior == Behavior::Function)
    }

    /// Function nodes that lie on a cycle of function-to-function wires.
    fn function_cycles(&self) -> BTreeSet<String> {
        let fns: Vec<&str> = self
            .flow
            .nodes
            .keys()
            .map(String::as_str)
            .filter(|n| self.is_function(n))
            .collect();
        let succ = |n: &str| -> Vec<&'a str> {
            self.outgoing
                .get(n)
                .into_iter()
                .flatten()
                .map(|w| w.to.node.as_str())
                .filter(|m| self.is_function(m))
                .collect()
        };
        let mut out = BTreeSet::new();
        for &f in &fns {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<&str> = succ(f).into();
            while let Some(n) = queue.pop_front() {
                if n == f {
                    out.insert(f.to_string());
                    break;
                }
                if seen.insert(n) {
                    queue.extend(succ(n));
                }
            }
        }
        out
    }

    fn resolve(&self, node: &str, port: &str, dir: Direction) -> Result<SchemaDoc, String> {
        let inst = &self.flow.nodes[node];
        resolve_port_schema(self.registry, node, inst, port, dir).map_err(|e| e.to_string())
    }

    /// Schema a node emits on an output port, if it can be determined.
    fn out_schema(&mut self, node: &str, port: &str) -> Option<SchemaDoc> {
        if self.is_function(node) {
            return self.function(node).effective.clone();
        }
        let key = (node.to_string(), port.to_string());
        if let Some(s) = self.outputs.get(&key) {
            return s.clone();
        }
        let s = self.resolve(node, port, Direction::Out).ok();
        self.outputs.insert(key, s.clone());
        s
    }

    /// Schema a node accepts on an input port, if it can be determined.
    fn in_schema(&mut self, node: &str, port: &str) -> Option<SchemaDoc> {
        if self.is_function(node) {
            return self.function(node).input.clone();
        }
        let key = (node.to_string(), port.to_string());
        if let Some(s) = self.inputs.get(&key) {
            return s.clone();
        }
        let s = self.resolve(node, port, Direction::In).ok();
        self.inputs.insert(key, s.clone());
        s
    }

    fn function(&mut self, node: &str) -> &FnInfo {
        if !self.functions.contains_key(node) {
            let info = self.compute_function(node);
            self.functions.insert(node.to_string(), info);
        }
        &self.functions[node]
    }

    fn compute_function(&mut self, node: &str) -> FnInfo {
        let mut diags = Vec::new();
        let input = if self.cyclic.contains(node) {
            diags.push(diag(
                Severity::Warning,
                "function-cycle",
                Location::node(node),
                "function nodes wired in a cycle cannot be typed; the body is not checked".into(),
            ));
            None
        } else {
            self.function_input(node, &mut diags)
        };
        let declared = self.function_output(node, &mut diags);
        let body = self.flow.nodes[node]
            .config
            .get("body")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();
        let mut effective = match &declared {
            Declared::Schema(s) => Some(s.clone()),
            _ => None,
        };
        let push_expr = |diags: &mut Vec<Diagnostic>, d: ExprDiagnostic, code: &str| {
            diags.push(diag(
                Severity::Error,
                code,
                Location::Expr {
                    node: node.into(),
                    line: d.line,
                    col: d.col,
                },
                format!("{} ({})", d.message, d.code),
            ))
        };
        match expr::parse(&body) {
            Err(d) => {
                push_expr(&mut diags, d, "function-parse");
                effective = None;
            }
            Ok(program) => {
                if let (Some(input), false) = (&input, declared == Declared::Unknown) {
                    let expected = match &declared {
                        Declared::Schema(s) => Some(s),
                        _ => None,
                    };
                    match expr::infer_type(&program, input, expected) {
                        Ok(typed) => {
                            if declared == Declared::Unconstrained {
                                effective = Some(type_to_schema(&typed.result));
                            }
                        }
                        Err(ds) => {
                            for d in ds {
                                push_expr(&mut diags, d, "function-type");
                            }
                            effective = None;
                        }
                    }
                } else {
                    effective = None;
                }
            }
        }
        FnInfo {
            input,
            declared,
            effective,
            diags,
        }
    }

    fn function_input(&mut self, node: &str, diags: &mut Vec<Diagnostic>) -> Option<SchemaDoc> {
        let producers: Vec<&Wire> = self.incoming.get(node).cloned().unwrap_or_default();
        if producers.is_empty() {
            return Some(SchemaDoc::empty_object());
        }
        let mut acc: Option<SchemaDoc> = None;
        let mut first: Option<&Wire> = None;
        for w in producers {
            let s = self.out_schema(&w.from.node, &w.from.port)?;
            acc = match acc {
                None => {
                    first = Some(w);
                    Some(s)
                }
                Some(prev) => match join(&prev, &s) {
                    Some(j) => Some(j),
                    None => {
                        let first = first.expect("set with acc");
                        diags.push(diag(
                            Severity::Error,
                            "conflicting-producers",
                            Location::port(node, "in"),
                            format!(
                                "`{}` and `{}` produce unrelated types; neither fits the other",
                                first.from.node, w.from.node
                            ),
                        ));
                        return None;
                    }
                },
            };
        }
        acc
    }

    fn function_output(&mut self, node: &str, diags: &mut Vec<Diagnostic>) -> Declared {
        let consumers: Vec<&Wire> = self.outgoing.get(node).cloned().unwrap_or_default();
        let mut acc: Option<(SchemaDoc, &Wire)> = None;
        for w in consumers {
            if self.is_function(&w.to.node) {
                continue;
            }
            let Some(s) = self.in_schema(&w.to.node, &w.to.port) else {
                return Declared::Unknown;
            };
            acc = match acc {
                None => Some((s, w)),
                Some((prev, first)) => match meet(&prev, &s) {
                    Some(m) => Some((m, first)),
                    None => {
                        diags.push(diag(
                            Severity::Error,
                            "conflicting-consumers",
                            Location::port(node, "out"),
                            format!(
                                "no value fits both `{}:{}` and `{}:{}`",
                                first.to.node, first.to.port, w.to.node, w.to.port
                            ),
                        ));
                        return Declared::Unknown;
                    }
                },
            };
        }
        match acc {
            Some((s, _)) => Declared::Schema(s),
            None => Declared::Unconstrained,
        }
    }

    fn node_diags(&mut self, node: &str) -> Vec<Diagnostic> {
        let Some(spec) = self.spec(node) else {
            return vec![];
        };
        let mut out = Vec::new();
        if spec.behavior == Behavior::Function {
            out.extend(self.function(node).diags.clone());
        } else {
            for (ports, dir) in [(&spec.inputs, Direction::In), (&spec.outputs, Direction::Out)] {
                for p in ports {
                    if let Err(reason) = self.resolve(node, &p.name, dir) {
                        out.push(diag(
                            Severity::Error,
                            "port-unresolved",
                            Location::port(node, &p.name),
                            reason,
                        ));
                    }
                }
            }
        }
        if spec.role != Role::Datasource
            && !spec.inputs.is_empty()
            && self.incoming.get(node).is_none_or(Vec::is_empty)
        {
            out.push(diag(
                Severity::Warning,
                "unwired-input",
                Location::node(node),
                "no input is wired; the node never receives data".into(),
            ));
        }
        if spec.role == Role::Output && !self.reachable.contains(node) {
            out.push(diag(
                Severity::Warning,
                "unreachable-output",
                Location::node(node),
                "no datasource reaches this output".into(),
            ));
        }
        match spec.behavior {
            Behavior::Trigger => out.extend(self.trigger_field(node)),
            Behavior::Extract => out.extend(self.extract_fields(node)),
            _ => {}
        }
        out
    }

    fn trigger_field(&mut self, node: &str) -> Option<Diagnostic> {
        let config = &self.flow.nodes[node].config;
        let field = config.get("field").and_then(Value::as_str)?.to_string();
        let schema = self.in_schema(node, "in")?;
        let path = if field.starts_with('.') {
            field.clone()
        } else {
            format!(".{field}")
        };
        let numeric = schema.arms().iter().all(|arm| {
            matches!(
                arm.at_path(&path),
                Some(SchemaDoc::Number(_) | SchemaDoc::Integer(_))
            )
        });
        (!numeric).then(|| {
            diag(
                Severity::Error,
                "bad-field",
                Location::node(node),
                format!("`{field}` is not a numeric field of every accepted shape"),
            )
        })
    }

    fn extract_fields(&mut self, node: &str) -> Vec<Diagnostic> {
        let config = &self.flow.nodes[node].config;
        let fields: Vec<String> = config
            .get("fields")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
            .unwrap_or_default();
        let Some(schema) = self.in_schema(node, "in") else {
            return vec![];
        };
        fields
            .into_iter()
            .filter(|f| {
                !schema.arms().iter().any(|arm| {
                    matches!(arm, SchemaDoc::Object { properties, .. } if properties.contains_key(f))
                })
            })
            .map(|f| {
                diag(
                    Severity::Warning,
                    "bad-field",
                    Location::node(node),
                    format!("`{f}` is not a field of any accepted shape and is ignored"),
                )
            })
            .collect()
    }

    fn wire_diag(&mut self, w: &Wire) -> Option<Diagnostic> {
        let p = self.out_schema(&w.from.node, &w.from.port)?;
        let c = self.in_schema(&w.to.node, &w.to.port)?;
        match is_subtype(&p, &c) {
            Ok(Compat::Compatible) => None,
            Ok(Compat::Incompatible { path, reason }) => {
                let at = if path.is_empty() { "the root".to_string() } else { format!("`{path}`") };
                Some(diag(
                    Severity::Error,
                    "wire-incompatible",
                    Location::Wire { wire: w.clone() },
                    format!("{p} does not fit {c}: {reason} at {at}"),
                ))
            }
            Err(e) => Some(diag(
                Severity::Error,
                "wire-incompatible",
                Location::Wire { wire: w.clone() },
                format!("invalid schema: {e}"),
            )),
        }
    }

    fn check_nodes(&mut self, nodes: &BTreeSet<String>) -> Vec<Diagnostic> {
        let flow = self.flow;
        let mut out = Vec::new();
        for n in nodes.iter().filter(|n| flow.nodes.contains_key(*n)) {
            out.extend(self.node_diags(n));
        }
        for w in &flow.wires {
            if nodes.contains(&w.from.node) || nodes.contains(&w.to.node) {
                out.extend(self.wire_diag(w));
            }
        }
        out
    }
}

fn finish(mut diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    diags.sort();
    diags.dedup();
    diags
}

/// Every diagnostic for the flow, ordered by location.
pub fn check_flow(flow: &FlowGraph, registry: &Registry) -> Vec<Diagnostic> {
    let all: BTreeSet<String> = flow.nodes.keys().cloned().collect();
    finish(Checker::new(flow, registry).check_nodes(&all))
}

/// Update `previous` (the diagnostics of the graph before the edit) for the
/// edited graph, recomputing only what the change set can affect.
pub fn recheck_after_edit(
    flow: &FlowGraph,
    registry: &Registry,
    changes: &ChangeSet,
    previous: &[Diagnostic],
) -> Vec<Diagnostic> {
    let mut checker = Checker::new(flow, registry);
    let dirty = dirty_nodes(&checker, changes);
    let mut gone = dirty.clone();
    gone.extend(changes.removed_nodes.iter().cloned());
    let mut out: Vec<Diagnostic> = previous
        .iter()
        .filter(|d| {
            !d.loc.touches(&gone)
                && !matches!(&d.loc, Location::Wire { wire } if changes.removed_wires.contains(wire))
        })
        .cloned()
        .collect();
    out.extend(checker.check_nodes(&dirty));
    finish(out)
}

/// The change set widened by function nodes whose declared output reads
/// the input schema of a changed node, and everything downstream of them.
fn dirty_nodes(checker: &Checker<'_>, changes: &ChangeSet) -> BTreeSet<String> {
    let flow = checker.flow;
    let mut seeds: BTreeSet<String> = changes.nodes.clone();
    let touched_by_removal = changes
        .removed_wires
        .iter()
        .flat_map(|w| [&w.from.node, &w.to.node]);
    seeds.extend(touched_by_removal.filter(|n| flow.nodes.contains_key(*n)).cloned());
    let preds: Vec<String> = flow
        .wires
        .iter()
        .filter(|w| seeds.contains(&w.to.node) && checker.is_function(&w.from.node))
        .map(|w| w.from.node.clone())
        .collect();
    seeds.extend(preds);
    flow.downstream(seeds.iter().map(String::as_str))
}

/// Signature of one function node, or `None` if `node` is not a function.
pub fn function_signature(
    flow: &FlowGraph,
    registry: &Registry,
    node: &str,
) -> Option<FunctionSignature> {
    let mut checker = Checker::new(flow, registry);
    if !flow.nodes.contains_key(node) || !checker.is_function(node) {
        return None;
    }
    Some(signature_of(&mut checker, node))
}

fn signature_of(checker: &mut Checker<'_>, node: &str) -> FunctionSignature {
    let info = checker.function(node);
    FunctionSignature {
        node: node.into(),
        input: info.input.clone(),
        output: match &info.declared {
            Declared::Schema(s) => Some(s.clone()),
            _ => None,
        },
    }
}

/// Signatures of every function node, by node id.
pub fn function_signatures(flow: &FlowGraph, registry: &Registry) -> Vec<FunctionSignature> {
    let mut checker = Checker::new(flow, registry);
    let fns: Vec<String> = flow
        .nodes
        .keys()
        .filter(|n| checker.is_function(n))
        .cloned()
        .collect();
    fns.iter().map(|n| signature_of(&mut checker, n)).collect()
}

/// Error-severity diagnostics per node (wire errors count for both ends).
pub fn errors_by_node(diags: &[Diagnostic]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for d in diags.iter().filter(|d| d.severity == Severity::Error) {
        match &d.loc {
            Location::Wire { wire } => {
                *out.entry(wire.from.node.clone()).or_default() += 1;
                *out.entry(wire.to.node.clone()).or_default() += 1;
            }
            other => *out.entry(other.anchor().to_string()).or_default() += 1,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{apply_edit, load_flow, FlowEdit, NodeInstance};
    use crate::library::builtin_specs;
    use serde_json::json;

    fn fixture(name: &str) -> FlowGraph {
        let path = format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
        load_flow(&std::fs::read(path).unwrap(), &builtin_specs()).unwrap()
    }

    fn node(spec: &str, config: Value) -> NodeInstance {
        NodeInstance {
            spec: spec.into(),
            config,
        }
    }

    fn errors(d: &[Diagnostic]) -> Vec<&Diagnostic> {
        d.iter().filter(|d| d.severity == Severity::Error).collect()
    }

    #[test]
    fn empty_flow_has_no_diagnostics() {
        assert!(check_flow(&FlowGraph::new("e", "empty"), &builtin_specs()).is_empty());
    }

    #[test]
    fn battery_chart_is_clean() {
        let d = check_flow(&fixture("battery_chart"), &builtin_specs());
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn accelerometer_into_lux_chart_flags_the_wire() {
        let d = check_flow(&fixture("miswire"), &builtin_specs());
        let errs = errors(&d);
        assert_eq!(errs.len(), 1, "{d:?}");
        assert_eq!(errs[0].code, "wire-incompatible");
        assert_eq!(
            errs[0].loc,
            Location::Wire {
                wire: Wire::new(("phone", "out"), ("chart", "in"))
            }
        );
        assert!(errs[0].message.contains("`.lux`"), "{}", errs[0].message);
    }

    #[test]
    fn sensor_change_flips_the_chart_wire() {
        let reg = builtin_specs();
        let flow = fixture("battery_chart");
        let before = check_flow(&flow, &reg);
        let edit = FlowEdit::ReconfigureNode {
            id: "phone".into(),
            config: json!({"sensor": "accelerometer", "period_ms": 1000}),
        };
        let (next, changes) = apply_edit(&flow, &edit, &reg).unwrap();
        let after = recheck_after_edit(&next, &reg, &changes, &before);
        assert_eq!(after, check_flow(&next, &reg));
        assert_eq!(errors(&after).len(), 1);
        assert_eq!(errors(&after)[0].code, "wire-incompatible");
    }

    #[test]
    fn isolated_edit_keeps_other_diagnostics() {
        let reg = builtin_specs();
        let flow = fixture("miswire");
        let before = check_flow(&flow, &reg);
        let edit = FlowEdit::AddNode {
            id: "lonely".into(),
            spec: "debug".into(),
            config: json!({"accepts": [{"shape": "number"}]}),
        };
        let (next, changes) = apply_edit(&flow, &edit, &reg).unwrap();
        let after = recheck_after_edit(&next, &reg, &changes, &before);
        let outside: Vec<_> = after.iter().filter(|d| d.loc.anchor() != "lonely").cloned().collect();
        assert_eq!(outside, before);
        assert_eq!(after, check_flow(&next, &reg));
    }

    #[test]
    fn function_between_light_and_trigger() {
        let reg = builtin_specs();
        let mut flow = FlowGraph::new("f", "fn");
        flow.nodes.insert("light".into(), node("light", json!({})));
        flow.nodes.insert("f".into(), node("function", json!({"body": "msg.lux > 1000"})));
        flow.nodes.insert(
            "t".into(),
            node(
                "trigger",
                json!({"accepts": [{"shape": "light"}], "field": "lux", "threshold": 1}),
            ),
        );
        flow.nodes.insert("d".into(), node("debug", json!({"accepts": [{"shape": "boolean"}]})));
        flow.wires.insert(Wire::new(("light", "out"), ("f", "in")));
        flow.wires.insert(Wire::new(("f", "out"), ("d", "in")));
        let sig = function_signature(&flow, &reg, "f").unwrap();
        assert_eq!(sig.input, Some(reg.shapes["light"].clone()));
        assert_eq!(sig.output, Some(SchemaDoc::boolean()));
        assert!(check_flow(&flow, &reg).iter().all(|d| d.loc.anchor() != "f"));
    }

    #[test]
    fn two_consumers_without_common_schema() {
        let reg = builtin_specs();
        let mut flow = FlowGraph::new("f", "fn");
        flow.nodes.insert("light".into(), node("light", json!({})));
        flow.nodes.insert("f".into(), node("function", json!({"body": "true"})));
        flow.nodes.insert("b".into(), node("debug", json!({"accepts": [{"shape": "boolean"}]})));
        flow.nodes.insert("n".into(), node("debug", json!({"accepts": [{"shape": "number"}]})));
        flow.wires.insert(Wire::new(("light", "out"), ("f", "in")));
        flow.wires.insert(Wire::new(("f", "out"), ("b", "in")));
        flow.wires.insert(Wire::new(("f", "out"), ("n", "in")));
        let d = check_flow(&flow, &reg);
        assert!(d.iter().any(|d| d.code == "conflicting-consumers"), "{d:?}");
    }

    #[test]
    fn unwired_function() {
        let reg = builtin_specs();
        let mut flow = FlowGraph::new("f", "fn");
        flow.nodes.insert("f".into(), node("function", json!({"body": "{}"})));
        let sig = function_signature(&flow, &reg, "f").unwrap();
        assert_eq!(sig.input, Some(SchemaDoc::empty_object()));
        assert_eq!(sig.output, None);
        let d = check_flow(&flow, &reg);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].severity, d[0].code.as_str()), (Severity::Warning, "unwired-input"));
    }

    #[test]
    fn function_body_errors_are_located() {
        let reg = builtin_specs();
        let mut flow = FlowGraph::new("f", "fn");
        flow.nodes.insert("light".into(), node("light", json!({})));
        flow.nodes.insert("f".into(), node("function", json!({"body": "msg.lux +\n msg.dark"})));
        flow.nodes.insert("g".into(), node("function", json!({"body": "msg."})));
        flow.wires.insert(Wire::new(("light", "out"), ("f", "in")));
        flow.wires.insert(Wire::new(("light", "out"), ("g", "in")));
        let d = check_flow(&flow, &reg);
        let f = d.iter().find(|d| d.loc.anchor() == "f" && d.severity == Severity::Error).unwrap();
        assert_eq!(f.code, "function-type");
        assert_eq!(f.loc, Location::Expr { node: "f".into(), line: 2, col: 5 });
        let g = d.iter().find(|d| d.loc.anchor() == "g" && d.severity == Severity::Error).unwrap();
        assert_eq!(g.code, "function-parse");
    }

    #[test]
    fn unconstrained_function_feeds_inferred_type() {
        let reg = builtin_specs();
        let mut flow = FlowGraph::new("f", "fn");
        flow.nodes.insert("light".into(), node("light", json!({})));
        flow.nodes.insert("f".into(), node("function", json!({"body": "{level: msg.lux}"})));
        flow.nodes.insert("g".into(), node("function", json!({"body": "msg.level * 2"})));
        flow.nodes.insert("n".into(), node("debug", json!({"accepts": [{"shape": "number"}]})));
        flow.wires.insert(Wire::new(("light", "out"), ("f", "in")));
        flow.wires.insert(Wire::new(("f", "out"), ("g", "in")));
        flow.wires.insert(Wire::new(("g", "out"), ("n", "in")));
        let d = check_flow(&flow, &reg);
        assert!(errors(&d).is_empty(), "{d:?}");
        let sig = function_signature(&flow, &reg, "g").unwrap();
        assert_eq!(sig.input, Some(SchemaDoc::object([("level", SchemaDoc::number())])));
    }

    #[test]
    fn conflicting_producers() {
        let reg = builtin_specs();
        let mut flow = FlowGraph::new("f", "fn");
        flow.nodes.insert("light".into(), node("light", json!({})));
        flow.nodes.insert("tw".into(), node("twitter", json!({})));
        flow.nodes.insert("f".into(), node("function", json!({"body": "1"})));
        flow.wires.insert(Wire::new(("light", "out"), ("f", "in")));
        flow.wires.insert(Wire::new(("tw", "out"), ("f", "in")));
        let d = check_flow(&flow, &reg);
        assert!(d.iter().any(|d| d.code == "conflicting-producers"), "{d:?}");
    }

    #[test]
    fn function_cycle_is_reported_not_typed() {
        let reg = builtin_specs();
        let mut flow = FlowGraph::new("f", "fn");
        flow.nodes.insert("f".into(), node("function", json!({"body": "msg"})));
        flow.nodes.insert("g".into(), node("function", json!({"body": "msg"})));
        flow.wires.insert(Wire::new(("f", "out"), ("g", "in")));
        flow.wires.insert(Wire::new(("g", "out"), ("f", "in")));
        let d = check_flow(&flow, &reg);
        assert_eq!(d.iter().filter(|d| d.code == "function-cycle").count(), 2);
    }

    #[test]
    fn trigger_field_must_be_numeric() {
        let reg = builtin_specs();
        let mut flow = FlowGraph::new("t", "trigger");
        flow.nodes.insert(
            "t".into(),
            node("trigger", json!({"accepts": [{"shape": "tweet"}], "field": "text", "threshold": 1})),
        );
        let d = check_flow(&flow, &reg);
        assert!(d.iter().any(|d| d.code == "bad-field" && d.severity == Severity::Error));
    }

    #[test]
    fn unreachable_output_warns() {
        let reg = builtin_specs();
        let mut flow = FlowGraph::new("u", "u");
        flow.nodes.insert("d".into(), node("debug", json!({"accepts": [{"shape": "number"}]})));
        let codes: Vec<String> = check_flow(&flow, &reg).into_iter().map(|d| d.code).collect();
        assert_eq!(codes, ["unreachable-output", "unwired-input"]);
    }

    #[test]
    fn json_lines_round_trip() {
        let d = check_flow(&fixture("miswire"), &builtin_specs());
        let text = to_json_lines(&d);
        assert!(text.lines().next().unwrap().starts_with(r#"{"severity":"error","code":"wire-incompatible","loc":{"wire":"#));
        assert_eq!(parse_json_lines(&text).unwrap(), d);
    }
}
