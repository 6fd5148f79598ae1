//! Deterministic execution of a checked flow on mock data, with a
//! provenance record for every message emitted, consumed or faulted.
//!
//! Time is virtual. A datasource with period `p` ticks at `p, 2p, …` up to
//! the session duration. Events run in `(t, class, key)` order: ticks at an
//! instant run first, by node id, then deliveries by message sequence.
//! Delivery takes no virtual time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::check::{check_flow, function_signature, Diagnostic, Severity};
use crate::expr::{self, evaluate, TypedProgram};
use crate::flow::{resolve_port_schema, Behavior, Direction, Endpoint, FlowGraph, Registry};
use crate::library::period_ms;
use crate::schema::{conforms, generate_value, validate_value, SchemaDoc, ValueProfile};

/// Processor hops allowed at one instant before a message is dropped as a
/// fault. Only cyclic wiring gets near it.
pub const MAX_DEPTH: u32 = 256;

/// An output payload and the messages it was computed from.
type Emission = (Value, Vec<MsgId>);

/// `(session seed, sequence)`; serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MsgId(pub u64, pub u64);

impl fmt::Display for MsgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.0, self.1)
    }
}

impl FromStr for MsgId {
    type Err = String;

    /// Accepts `seed:seq`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `seed:seq`, got `{s}`"))?;
        let parse = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("`{x}`: {e}"));
        Ok(MsgId(parse(a)?, parse(b)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Emit,
    Consume,
    Fault,
}

/// One provenance log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub kind: Kind,
    pub msg: MsgId,
    pub node: String,
    pub port: String,
    pub t: u64,
    pub payload: Value,
    pub parents: Vec<MsgId>,
}

pub fn to_json_lines(log: &[Record]) -> String {
    log.iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct LogParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse_log(text: &str) -> Result<Vec<Record>, LogParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| LogParseError {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub seed: u64,
    /// Virtual milliseconds.
    pub duration: u64,
    /// Datasource node id → profile name.
    #[serde(default)]
    pub profiles: BTreeMap<String, String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error("flow has {} error diagnostic(s); refusing to run", .0.len())]
    Refused(Vec<Diagnostic>),
    #[error("profile for unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` is not a datasource with profiles")]
    NotADatasource { node: String },
    #[error("node `{node}` has no profile `{profile}`")]
    UnknownProfile { node: String, profile: String },
    #[error("node `{node}`: {message}")]
    Setup { node: String, message: String },
}

impl RunError {
    pub fn code(&self) -> &'static str {
        match self {
            RunError::Refused(_) => "refuse-to-run",
            RunError::UnknownNode(_) => "unknown-node",
            RunError::NotADatasource { .. } => "not-a-datasource",
            RunError::UnknownProfile { .. } => "unknown-profile",
            RunError::Setup { .. } => "setup",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Tick { t: u64, node: String },
    Deliver { t: u64, seq: u64 },
}

impl Key {
    fn order(&self) -> (u64, u8, &str, u64) {
        match self {
            Key::Tick { t, node } => (*t, 0, node, 0),
            Key::Deliver { t, seq } => (*t, 1, "", *seq),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Ordered(Key);

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.order().cmp(&other.0.order())
    }
}

impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct Delivery {
    msg: MsgId,
    to: Endpoint,
    payload: Value,
    depth: u32,
}

#[derive(Debug, Clone)]
enum NodeState {
    Stateless,
    Trigger { on: bool },
    Combine { a: Option<(MsgId, Value)>, b: Option<(MsgId, Value)> },
}

struct NodeRt {
    behavior: Behavior,
    config: Value,
    outputs: Vec<String>,
    out_schemas: BTreeMap<String, SchemaDoc>,
    program: Option<TypedProgram>,
    source: Option<SourceRt>,
    state: NodeState,
}

struct SourceRt {
    period: u64,
    schema: SchemaDoc,
    profile: Option<ValueProfile>,
    rng: ChaCha8Rng,
}

/// A message received by an output node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Received {
    pub msg: MsgId,
    pub t: u64,
    pub payload: Value,
}

/// A running or finished session. Step it, or run it to the end.
pub struct Session {
    config: SessionConfig,
    nodes: BTreeMap<String, NodeRt>,
    wires: BTreeMap<Endpoint, Vec<Endpoint>>,
    queue: BTreeMap<Ordered, Delivery>,
    ticks: BTreeSet<Ordered>,
    seq: u64,
    log: Vec<Record>,
    outputs: BTreeMap<String, Vec<Received>>,
}

fn stream_of(node: &str) -> u64 {
    // FNV-1a; stable across platforms and releases.
    node.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

impl Session {
    /// Prepare a session. Fails if the flow has error diagnostics or the
    /// profile assignment does not fit.
    pub fn new(flow: &FlowGraph, registry: &Registry, config: SessionConfig) -> Result<Self, RunError> {
        let errors: Vec<Diagnostic> = check_flow(flow, registry)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        if !errors.is_empty() {
            return Err(RunError::Refused(errors));
        }
        for node in config.profiles.keys() {
            if !flow.nodes.contains_key(node) {
                return Err(RunError::UnknownNode(node.clone()));
            }
        }
        let mut nodes = BTreeMap::new();
        for (id, inst) in &flow.nodes {
            let Some(spec) = registry.get(&inst.spec) else { continue };
            let setup = |message: String| RunError::Setup {
                node: id.clone(),
                message,
            };
            let mut out_schemas = BTreeMap::new();
            let mut program = None;
            if spec.behavior == Behavior::Function {
                let sig = function_signature(flow, registry, id).expect("function node");
                let input = sig.input.ok_or_else(|| setup("input type unknown".into()))?;
                let body = inst.config.get("body").and_then(Value::as_str).unwrap_or("");
                let typed = expr::compile(body, &input, sig.output.as_ref())
                    .map_err(|d| setup(format!("{} diagnostic(s) in body", d.len())))?;
                program = Some(typed);
            } else {
                for p in &spec.outputs {
                    let s = resolve_port_schema(registry, id, inst, &p.name, Direction::Out)
                        .map_err(|e| setup(e.to_string()))?;
                    out_schemas.insert(p.name.clone(), s);
                }
            }
            let profile = match config.profiles.get(id) {
                Some(name) => {
                    if spec.behavior != Behavior::Source {
                        return Err(RunError::NotADatasource { node: id.clone() });
                    }
                    Some(spec.profile(name).cloned().ok_or_else(|| RunError::UnknownProfile {
                        node: id.clone(),
                        profile: name.clone(),
                    })?)
                }
                None => None,
            };
            let source = (spec.behavior == Behavior::Source).then(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(stream_of(id));
                SourceRt {
                    period: period_ms(&inst.config).max(1),
                    schema: out_schemas.get("out").cloned().unwrap_or_else(SchemaDoc::empty_object),
                    profile,
                    rng,
                }
            });
            let state = match spec.behavior {
                Behavior::Trigger => NodeState::Trigger { on: false },
                Behavior::Combine => NodeState::Combine { a: None, b: None },
                _ => NodeState::Stateless,
            };
            nodes.insert(
                id.clone(),
                NodeRt {
                    behavior: spec.behavior,
                    config: inst.config.clone(),
                    outputs: spec.outputs.iter().map(|p| p.name.clone()).collect(),
                    out_schemas,
                    program,
                    source,
                    state,
                },
            );
        }
        let mut wires: BTreeMap<Endpoint, Vec<Endpoint>> = BTreeMap::new();
        for w in &flow.wires {
            wires.entry(w.from.clone()).or_default().push(w.to.clone());
        }
        let mut ticks = BTreeSet::new();
        for (id, n) in &nodes {
            if let Some(src) = &n.source {
                if src.period <= config.duration {
                    ticks.insert(Ordered(Key::Tick {
                        t: src.period,
                        node: id.clone(),
                    }));
                }
            }
        }
        let outputs = nodes
            .iter()
            .filter(|(_, n)| n.behavior == Behavior::Sink)
            .map(|(id, _)| (id.clone(), Vec::new()))
            .collect();
        Ok(Session {
            config,
            nodes,
            wires,
            queue: BTreeMap::new(),
            ticks,
            seq: 0,
            log: Vec::new(),
            outputs,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn is_finished(&self) -> bool {
        self.queue.is_empty() && self.ticks.is_empty()
    }

    /// Records so far, in processing order.
    pub fn log(&self) -> &[Record] {
        &self.log
    }

    /// Messages received by each output node so far.
    pub fn outputs(&self) -> &BTreeMap<String, Vec<Received>> {
        &self.outputs
    }

    /// Process the next event. Returns the number of records it appended,
    /// or `None` once the session is finished.
    pub fn step(&mut self) -> Option<usize> {
        let before = self.log.len();
        let next_tick = self.ticks.first().cloned();
        let next_delivery = self.queue.keys().next().cloned();
        let take_tick = match (&next_tick, &next_delivery) {
            (None, None) => return None,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(t), Some(d)) => t < d,
        };
        if take_tick {
            let key = next_tick.expect("checked");
            self.ticks.remove(&key);
            let Key::Tick { t, node } = key.0 else { unreachable!() };
            self.tick(t, &node);
        } else {
            let key = next_delivery.expect("checked");
            let d = self.queue.remove(&key).expect("present");
            let Key::Deliver { t, .. } = key.0 else { unreachable!() };
            self.deliver(t, d);
        }
        Some(self.log.len() - before)
    }

    pub fn run_to_end(&mut self) {
        while self.step().is_some() {}
    }

    pub fn finish(mut self) -> SessionResult {
        self.run_to_end();
        SessionResult {
            log: self.log,
            outputs: self.outputs,
        }
    }

    fn tick(&mut self, t: u64, node: &str) {
        let n = self.nodes.get_mut(node).expect("tick for known node");
        let src = n.source.as_mut().expect("ticks only for sources");
        let next = t + src.period;
        let payload = generate_value(&src.schema, src.profile.as_ref(), &mut src.rng).map(|mut v| {
            if let (Value::Object(map), SchemaDoc::Object { properties, .. }) = (&mut v, &src.schema) {
                if properties.contains_key("ts") {
                    map.insert("ts".into(), json!(t));
                }
            }
            v
        });
        if next <= self.config.duration {
            self.ticks.insert(Ordered(Key::Tick {
                t: next,
                node: node.to_string(),
            }));
        }
        match payload {
            Ok(v) => self.emit(t, node, "out", v, vec![], 0),
            Err(e) => self.fault(t, node, "out", MsgId(self.config.seed, self.seq), "generate", &e.to_string()),
        }
    }

    fn next_id(&mut self) -> MsgId {
        self.seq += 1;
        MsgId(self.config.seed, self.seq)
    }

    /// Log the emission (one message per outgoing wire) and queue deliveries.
    fn emit(&mut self, t: u64, node: &str, port: &str, payload: Value, parents: Vec<MsgId>, depth: u32) {
        let from = Endpoint {
            node: node.to_string(),
            port: port.to_string(),
        };
        let targets = self.wires.get(&from).cloned().unwrap_or_default();
        if targets.is_empty() {
            let id = self.next_id();
            self.push(Kind::Emit, id, node, port, t, payload, parents);
            return;
        }
        for to in targets {
            let id = self.next_id();
            self.push(Kind::Emit, id, node, port, t, payload.clone(), parents.clone());
            self.queue.insert(
                Ordered(Key::Deliver { t, seq: id.1 }),
                Delivery {
                    msg: id,
                    to,
                    payload: payload.clone(),
                    depth,
                },
            );
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, kind: Kind, msg: MsgId, node: &str, port: &str, t: u64, payload: Value, parents: Vec<MsgId>) {
        self.log.push(Record {
            kind,
            msg,
            node: node.into(),
            port: port.into(),
            t,
            payload,
            parents,
        });
    }

    fn fault(&mut self, t: u64, node: &str, port: &str, msg: MsgId, code: &str, message: &str) {
        self.push(
            Kind::Fault,
            msg,
            node,
            port,
            t,
            json!({"code": code, "message": message}),
            vec![],
        );
    }

    fn deliver(&mut self, t: u64, d: Delivery) {
        let node = d.to.node.clone();
        let port = d.to.port.clone();
        self.push(Kind::Consume, d.msg, &node, &port, t, d.payload.clone(), vec![]);
        if d.depth >= MAX_DEPTH {
            self.fault(t, &node, &port, d.msg, "hop-limit", "message dropped after too many hops at one instant");
            return;
        }
        let Some(n) = self.nodes.get_mut(&node) else { return };
        let result: Result<Option<Emission>, (String, String)> = match n.behavior {
            Behavior::Source => Ok(None),
            Behavior::Sink => {
                if let Some(list) = self.outputs.get_mut(&node) {
                    list.push(Received {
                        msg: d.msg,
                        t,
                        payload: d.payload.clone(),
                    });
                }
                Ok(None)
            }
            Behavior::Function => {
                let program = n.program.as_ref().expect("compiled at setup");
                evaluate(program, &d.payload)
                    .map(|v| Some((v, vec![d.msg])))
                    .map_err(|e| (e.code().to_string(), e.to_string()))
            }
            Behavior::Extract => Ok(Some((extract(&n.config, &d.payload), vec![d.msg]))),
            Behavior::Chart => Ok(Some((chart_point(t, &d.payload), vec![d.msg]))),
            Behavior::Trigger => trigger(&n.config, &mut n.state, &d.payload)
                .map(|fired| fired.map(|b| (Value::Bool(b), vec![d.msg]))),
            Behavior::Combine => {
                let NodeState::Combine { a, b } = &mut n.state else { unreachable!() };
                let slot = (d.msg, d.payload.clone());
                match port.as_str() {
                    "a" => *a = Some(slot),
                    _ => *b = Some(slot),
                }
                Ok(match (a, b) {
                    (Some((ia, va)), Some((ib, vb))) => {
                        Some((json!({"a": va, "b": vb}), vec![*ia, *ib]))
                    }
                    _ => None,
                })
            }
        };
        match result {
            Ok(None) => {}
            Ok(Some((value, parents))) => {
                let out_port = n.outputs.first().cloned().unwrap_or_else(|| "out".into());
                if let Some(schema) = n.out_schemas.get(&out_port) {
                    if !conforms(&value, schema) {
                        let message = match validate_value(&value, schema).ok().and_then(|v| v.violations.into_iter().next()) {
                            Some(v) => format!("output does not fit port schema at `{}`: {}", v.path, v.reason),
                            None => "output does not fit port schema".into(),
                        };
                        self.fault(t, &node, &port, d.msg, "output-mismatch", &message);
                        return;
                    }
                }
                self.emit(t, &node, &out_port, value, parents, d.depth + 1);
            }
            Err((code, message)) => self.fault(t, &node, &port, d.msg, &code, &message),
        }
    }
}

fn extract(config: &Value, payload: &Value) -> Value {
    let (Some(fields), Value::Object(map)) = (config.get("fields").and_then(Value::as_array), payload) else {
        return payload.clone();
    };
    let keep: BTreeSet<&str> = fields.iter().filter_map(Value::as_str).collect();
    Value::Object(
        map.iter()
            .filter(|(k, _)| keep.contains(k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect(),
    )
}

fn numeric_leaves(prefix: &str, v: &Value, out: &mut Vec<Value>) {
    match v {
        Value::Number(n) => {
            let name = if prefix.is_empty() { "value" } else { prefix };
            out.push(json!({"name": name, "value": n.as_f64().unwrap_or(0.0)}));
        }
        Value::Object(map) => {
            for (k, child) in map {
                if prefix.is_empty() && k == "ts" {
                    continue;
                }
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                numeric_leaves(&path, child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                let path = if prefix.is_empty() { i.to_string() } else { format!("{prefix}.{i}") };
                numeric_leaves(&path, child, out);
            }
        }
        _ => {}
    }
}

/// Numeric leaves of the payload as one series point, stamped with the
/// payload's `ts` when it has one.
fn chart_point(t: u64, payload: &Value) -> Value {
    let mut series = Vec::new();
    numeric_leaves("", payload, &mut series);
    let stamp = payload
        .get("ts")
        .and_then(Value::as_f64)
        .unwrap_or(t as f64);
    let mut m = Map::new();
    m.insert("t".into(), json!(stamp));
    m.insert("series".into(), Value::Array(series));
    Value::Object(m)
}

/// Returns the new state when the predicate flips.
fn trigger(config: &Value, state: &mut NodeState, payload: &Value) -> Result<Option<bool>, (String, String)> {
    let NodeState::Trigger { on } = state else { unreachable!() };
    let field = config.get("field").and_then(Value::as_str).unwrap_or("");
    let pointer = format!("/{}", field.trim_start_matches('.').replace('.', "/"));
    let x = payload
        .pointer(&pointer)
        .and_then(Value::as_f64)
        .ok_or_else(|| ("missing-field".to_string(), format!("no numeric `{field}` in message")))?;
    let threshold = config.get("threshold").and_then(Value::as_f64).unwrap_or(0.0);
    let holds = match config.get("op").and_then(Value::as_str).unwrap_or("gt") {
        "ge" => x >= threshold,
        "lt" => x < threshold,
        "le" => x <= threshold,
        _ => x > threshold,
    };
    if holds == *on {
        return Ok(None);
    }
    *on = holds;
    Ok(Some(holds))
}

/// A finished session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub log: Vec<Record>,
    pub outputs: BTreeMap<String, Vec<Received>>,
}

impl SessionResult {
    /// Number of `true` emissions per trigger node.
    pub fn firings(&self, node: &str) -> usize {
        self.log
            .iter()
            .filter(|r| r.kind == Kind::Emit && r.node == node && r.payload == Value::Bool(true))
            .map(|r| (r.t, r.parents.clone()))
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn faults(&self) -> usize {
        self.log.iter().filter(|r| r.kind == Kind::Fault).count()
    }

    pub fn summary(&self, flow: &FlowGraph, registry: &Registry, config: &SessionConfig) -> RunSummary {
        let firings = flow
            .nodes
            .iter()
            .filter(|(_, n)| registry.get(&n.spec).is_some_and(|s| s.behavior == Behavior::Trigger))
            .map(|(id, _)| (id.clone(), self.firings(id)))
            .collect();
        RunSummary {
            seed: config.seed,
            duration: config.duration,
            records: self.log.len(),
            faults: self.faults(),
            outputs: self.outputs.iter().map(|(k, v)| (k.clone(), v.len())).collect(),
            firings,
        }
    }
}

/// Counts reported after a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub seed: u64,
    pub duration: u64,
    pub records: usize,
    pub faults: usize,
    /// Output node → messages received.
    pub outputs: BTreeMap<String, usize>,
    /// Trigger node → times it switched on.
    pub firings: BTreeMap<String, usize>,
}

pub fn start_session(flow: &FlowGraph, registry: &Registry, config: SessionConfig) -> Result<SessionResult, RunError> {
    Ok(Session::new(flow, registry, config)?.finish())
}

/// Re-run a session from the same inputs. The log is identical.
pub fn replay(flow: &FlowGraph, registry: &Registry, config: SessionConfig) -> Result<SessionResult, RunError> {
    start_session(flow, registry, config)
}

#[derive(Debug, Error, PartialEq)]
pub enum InspectError {
    #[error("unknown message {0}")]
    UnknownMessage(MsgId),
    #[error("no records for node `{0}`")]
    UnknownNode(String),
    #[error("empty time range {from}..{to}")]
    BadRange { from: u64, to: u64 },
}

impl InspectError {
    pub fn code(&self) -> &'static str {
        match self {
            InspectError::UnknownMessage(_) => "unknown-message",
            InspectError::UnknownNode(_) => "unknown-node",
            InspectError::BadRange { .. } => "bad-range",
        }
    }
}

/// A message and the messages it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub msg: MsgId,
    pub node: String,
    pub port: String,
    pub t: u64,
    pub payload: Value,
    pub parents: Vec<Lineage>,
}

impl Lineage {
    /// Parentless ancestors, left to right.
    pub fn leaves(&self) -> Vec<&Lineage> {
        if self.parents.is_empty() {
            return vec![self];
        }
        self.parents.iter().flat_map(Lineage::leaves).collect()
    }

    pub fn depth(&self) -> usize {
        1 + self.parents.iter().map(Lineage::depth).max().unwrap_or(0)
    }
}

pub fn lineage(log: &[Record], id: MsgId) -> Result<Lineage, InspectError> {
    let emits: BTreeMap<MsgId, &Record> = log
        .iter()
        .filter(|r| r.kind == Kind::Emit)
        .map(|r| (r.msg, r))
        .collect();
    build_lineage(&emits, id)
}

fn build_lineage(emits: &BTreeMap<MsgId, &Record>, id: MsgId) -> Result<Lineage, InspectError> {
    let r = emits.get(&id).ok_or(InspectError::UnknownMessage(id))?;
    let parents = r
        .parents
        .iter()
        // Parents always precede their children, so this terminates.
        .filter(|p| **p < id)
        .map(|p| build_lineage(emits, *p))
        .collect::<Result<_, _>>()?;
    Ok(Lineage {
        msg: r.msg,
        node: r.node.clone(),
        port: r.port.clone(),
        t: r.t,
        payload: r.payload.clone(),
        parents,
    })
}

/// Records of `node` with `from <= t <= to`, in log order.
pub fn window<'a>(log: &'a [Record], node: &str, from: u64, to: u64) -> Result<Vec<&'a Record>, InspectError> {
    if from > to {
        return Err(InspectError::BadRange { from, to });
    }
    if !log.iter().any(|r| r.node == node) {
        return Err(InspectError::UnknownNode(node.into()));
    }
    Ok(log
        .iter()
        .filter(|r| r.node == node && (from..=to).contains(&r.t))
        .collect())
}
