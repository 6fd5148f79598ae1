//! Random generators shared by the integration suites.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use edgeflow_core::flow::{FlowEdit, FlowGraph, NodeInstance, Registry, Wire};
use edgeflow_core::schema::{LenRange, Range, SchemaDoc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_dir() -> String {
    format!("{}/../../fixtures", env!("CARGO_MANIFEST_DIR"))
}

pub fn load_fixture(name: &str, reg: &Registry) -> FlowGraph {
    let bytes = std::fs::read(format!("{}/{name}.json", fixture_dir())).unwrap();
    edgeflow_core::load_flow(&bytes, reg).unwrap()
}

pub const FIXTURES: [&str; 6] = [
    "battery_chart",
    "chain",
    "function",
    "miswire",
    "mood_motion",
    "threshold",
];

const WORDS: [&str; 6] = ["a", "b", "c", "lux", "x", "ts"];
const STRINGS: [&str; 5] = ["on", "off", "idle", "walk", "run"];

fn int_range(rng: &mut Rng8) -> Range {
    let lo = rng.gen_range(-20i64..=20);
    match rng.gen_range(0..4) {
        0 => Range::UNBOUNDED,
        1 => Range::new(Some(lo as f64), None),
        _ => Range::between(lo as f64, (lo + rng.gen_range(0..=30)) as f64),
    }
}

fn num_range(rng: &mut Rng8) -> Range {
    let lo: f64 = (rng.gen_range(-400..=400) as f64) / 4.0;
    match rng.gen_range(0..4) {
        0 => Range::UNBOUNDED,
        1 => Range::new(None, Some(lo)),
        _ => Range::between(lo, lo + (rng.gen_range(0..=200) as f64) / 4.0),
    }
}

fn string_enum(rng: &mut Rng8) -> SchemaDoc {
    let n = rng.gen_range(1..=3);
    let picked: Vec<&str> = STRINGS.choose_multiple(rng, n).copied().collect();
    SchemaDoc::string_enum(picked)
}

/// An inhabited, well-formed schema, optionally with unions.
pub fn random_schema(rng: &mut Rng8, depth: u32, unions: bool) -> SchemaDoc {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        return match rng.gen_range(0..5) {
            0 => SchemaDoc::Boolean,
            1 => SchemaDoc::Integer(int_range(rng)),
            2 => SchemaDoc::Number(num_range(rng)),
            3 => string_enum(rng),
            _ => SchemaDoc::string(),
        };
    }
    match rng.gen_range(0..if unions { 3 } else { 2 }) {
        0 => {
            let lo = rng.gen_range(0..=2);
            let len = LenRange {
                min: (lo > 0).then_some(lo),
                max: rng.gen_bool(0.6).then(|| lo + rng.gen_range(0..=3)),
            };
            SchemaDoc::Array {
                items: Box::new(random_schema(rng, depth - 1, unions)),
                len,
            }
        }
        1 => {
            let n = rng.gen_range(0..=3);
            let names: Vec<&str> = WORDS.choose_multiple(rng, n).copied().collect();
            let properties: BTreeMap<String, SchemaDoc> = names
                .iter()
                .map(|k| (k.to_string(), random_schema(rng, depth - 1, unions)))
                .collect();
            let required = properties
                .keys()
                .filter(|_| rng.gen_bool(0.7))
                .cloned()
                .collect();
            SchemaDoc::Object {
                properties,
                required,
            }
        }
        _ => {
            let n = rng.gen_range(2..=3);
            SchemaDoc::Union((0..n).map(|_| random_schema(rng, depth - 1, false)).collect())
        }
    }
}

/// A schema likely to be a supertype of `s`: ranges widen, requirements
/// loosen, optional fields appear, and (with `unions`) arms get added.
pub fn widen(rng: &mut Rng8, s: &SchemaDoc, unions: bool) -> SchemaDoc {
    let out = match s {
        SchemaDoc::Boolean => SchemaDoc::Boolean,
        SchemaDoc::Integer(r) => {
            let r = widen_range(rng, r);
            if rng.gen_bool(0.3) {
                SchemaDoc::Number(r)
            } else {
                SchemaDoc::Integer(integral(r))
            }
        }
        SchemaDoc::Number(r) => SchemaDoc::Number(widen_range(rng, r)),
        SchemaDoc::String(Some(vals)) => {
            if rng.gen_bool(0.3) {
                SchemaDoc::string()
            } else {
                let mut vals = vals.clone();
                vals.insert(STRINGS.choose(rng).unwrap().to_string());
                SchemaDoc::String(Some(vals))
            }
        }
        SchemaDoc::String(None) => SchemaDoc::string(),
        SchemaDoc::Array { items, len } => SchemaDoc::Array {
            items: Box::new(widen(rng, items, unions)),
            len: LenRange {
                min: len.min.filter(|_| rng.gen_bool(0.5)),
                max: len.max.and_then(|m| rng.gen_bool(0.6).then(|| m + rng.gen_range(0..=2))),
            },
        },
        SchemaDoc::Object {
            properties,
            required,
        } => {
            let mut properties: BTreeMap<String, SchemaDoc> = properties
                .iter()
                .map(|(k, v)| (k.clone(), widen(rng, v, unions)))
                .collect();
            let required: BTreeSet<String> =
                required.iter().filter(|_| rng.gen_bool(0.8)).cloned().collect();
            if rng.gen_bool(0.3) {
                let k = WORDS.choose(rng).unwrap().to_string();
                properties.entry(k).or_insert_with(|| random_schema(rng, 1, false));
            }
            SchemaDoc::Object {
                properties,
                required,
            }
        }
        SchemaDoc::Union(arms) => {
            SchemaDoc::Union(arms.iter().map(|a| widen(rng, a, unions)).collect())
        }
    };
    if unions && rng.gen_bool(0.15) {
        return SchemaDoc::Union(vec![out, random_schema(rng, 1, false)]);
    }
    out
}

fn widen_range(rng: &mut Rng8, r: &Range) -> Range {
    let min = r.min.and_then(|m| (!rng.gen_bool(0.2)).then(|| m - rng.gen_range(0..=3) as f64));
    let max = r.max.and_then(|m| (!rng.gen_bool(0.2)).then(|| m + rng.gen_range(0..=3) as f64));
    Range::new(min, max)
}

fn integral(r: Range) -> Range {
    Range::new(r.min.map(f64::ceil), r.max.map(f64::floor))
}

/// Either an independent schema or a perturbation of `p`; perturbations
/// sometimes narrow instead of widen so both verdicts occur.
pub fn consumer_for(rng: &mut Rng8, p: &SchemaDoc, unions: bool) -> SchemaDoc {
    match rng.gen_range(0..10) {
        0..=2 => random_schema(rng, 2, unions),
        3..=4 => narrow(rng, p),
        _ => widen(rng, p, unions),
    }
}

fn narrow(rng: &mut Rng8, s: &SchemaDoc) -> SchemaDoc {
    match s {
        SchemaDoc::Integer(r) => {
            let lo = r.min.unwrap_or(-5.0) + rng.gen_range(0..=2) as f64;
            SchemaDoc::Integer(Range::between(lo, lo + rng.gen_range(0..=3) as f64))
        }
        SchemaDoc::Number(r) => {
            let lo = r.min.unwrap_or(-5.0) + 0.5;
            SchemaDoc::Number(Range::between(lo, lo + 2.0))
        }
        SchemaDoc::String(_) => string_enum(rng),
        SchemaDoc::Array { items, len } => SchemaDoc::Array {
            items: Box::new(narrow(rng, items)),
            len: LenRange {
                min: len.min,
                max: Some(len.lo() + 1),
            },
        },
        SchemaDoc::Object {
            properties,
            required,
        } => {
            let mut properties = properties.clone();
            let mut required = required.clone();
            if let Some(k) = properties.keys().next().cloned() {
                let v = narrow(rng, &properties[&k]);
                properties.insert(k.clone(), v);
                required.insert(k);
            }
            SchemaDoc::Object {
                properties,
                required,
            }
        }
        other => other.clone(),
    }
}

/// A union-free schema with a small finite domain.
pub fn finite_schema(rng: &mut Rng8, depth: u32) -> SchemaDoc {
    let leaf = depth == 0 || rng.gen_bool(0.45);
    if leaf {
        return match rng.gen_range(0..3) {
            0 => SchemaDoc::Boolean,
            1 => {
                let lo = rng.gen_range(-4i64..=4);
                SchemaDoc::integer_range(lo, lo + rng.gen_range(0..=4))
            }
            _ => string_enum(rng),
        };
    }
    if rng.gen_bool(0.4) {
        let lo = rng.gen_range(0..=1);
        SchemaDoc::array_len(finite_schema(rng, depth - 1), (lo > 0).then_some(lo), Some(lo + rng.gen_range(0..=2)))
    } else {
        let n = rng.gen_range(0..=3);
        let names: Vec<&str> = WORDS.choose_multiple(rng, n).copied().collect();
        let properties: BTreeMap<String, SchemaDoc> = names
            .iter()
            .map(|k| (k.to_string(), finite_schema(rng, depth - 1)))
            .collect();
        let required = properties.keys().filter(|_| rng.gen_bool(0.7)).cloned().collect();
        SchemaDoc::Object {
            properties,
            required,
        }
    }
}

/// A union-free consumer: finite, a perturbation, or an unbounded schema.
pub fn union_free_consumer(rng: &mut Rng8, p: &SchemaDoc) -> SchemaDoc {
    match rng.gen_range(0..10) {
        0..=2 => finite_schema(rng, 2),
        3..=4 => narrow(rng, p),
        5 => random_schema(rng, 2, false),
        _ => widen(rng, p, false),
    }
}

// ---- flows ----

const SHAPES: [&str; 8] = [
    "light",
    "battery",
    "accelerometer",
    "bluetooth-scan",
    "tweet",
    "boolean",
    "number",
    "string",
];

const BODIES: [&str; 10] = [
    "msg",
    "true",
    "msg.lux > 10",
    "{}",
    "1 / 0",
    "msg.nope",
    "msg.",
    "len(msg.text)",
    "{level: msg.lux, at: msg.ts}",
    "msg.x * 2.0",
];

fn accepts(rng: &mut Rng8) -> Value {
    let n = if rng.gen_bool(0.85) { 1 } else { 2 };
    let picked: Vec<Value> = SHAPES
        .choose_multiple(rng, n)
        .map(|s| json!({"shape": s}))
        .collect();
    Value::Array(picked)
}

fn pick_some(rng: &mut Rng8, from: &[&str]) -> Value {
    let n = rng.gen_range(0..=from.len().min(3));
    Value::Array(from.choose_multiple(rng, n).map(|s| json!(s)).collect())
}

/// A config valid for the builtin spec `spec`.
pub fn random_config(rng: &mut Rng8, spec: &str) -> Value {
    match spec {
        "light" => json!({"period_ms": *[100u64, 1000, 60000].choose(rng).unwrap()}),
        "smartphone" => json!({
            "sensor": *["accelerometer", "battery", "bluetooth-scan"].choose(rng).unwrap(),
            "period_ms": *[10u64, 100, 1000, 60000].choose(rng).unwrap(),
        }),
        "twitter" => json!({}),
        "function" => json!({"body": *BODIES.choose(rng).unwrap()}),
        "extract" => {
            let mut c = json!({"accepts": accepts(rng)});
            if rng.gen_bool(0.6) {
                c["fields"] = pick_some(rng, &["lux", "ts", "text", "x", "handle"]);
            }
            if rng.gen_bool(0.5) {
                c["drop"] = pick_some(rng, &["identifier", "handle", "gait", "personal", "mac-address"]);
            }
            c
        }
        "trigger" => json!({
            "accepts": accepts(rng),
            "field": *["lux", "x", "ts"].choose(rng).unwrap(),
            "threshold": 1000,
        }),
        "combine" => json!({"a": accepts(rng), "b": accepts(rng)}),
        "chart" | "debug" => json!({"accepts": accepts(rng)}),
        "chart-data" => json!({}),
        "export" => json!({"accepts": accepts(rng), "destination": "https://collector.example/in"}),
        "actuate" => json!({"accepts": [{"shape": "boolean"}], "device": "lamp"}),
        other => panic!("no config generator for {other}"),
    }
}

pub const SPECS: [&str; 13] = [
    "light",
    "smartphone",
    "twitter",
    "function",
    "extract",
    "trigger",
    "combine",
    "chart",
    "debug",
    "chart-data",
    "export",
    "actuate",
    "function",
];

fn input_ports(spec: &str) -> &'static [&'static str] {
    match spec {
        "light" | "smartphone" | "twitter" => &[],
        "combine" => &["a", "b"],
        _ => &["in"],
    }
}

fn has_output(spec: &str) -> bool {
    !matches!(spec, "debug" | "chart-data" | "export" | "actuate")
}

/// A random wire between existing nodes, or `None` if none is possible.
pub fn random_wire(rng: &mut Rng8, flow: &FlowGraph) -> Option<Wire> {
    let sources: Vec<&String> = flow.nodes.iter().filter(|(_, n)| has_output(&n.spec)).map(|(k, _)| k).collect();
    let sinks: Vec<(&String, &str)> = flow
        .nodes
        .iter()
        .flat_map(|(k, n)| input_ports(&n.spec).iter().map(move |p| (k, *p)))
        .collect();
    let from = sources.choose(rng)?;
    let (to, port) = sinks.choose(rng)?;
    Some(Wire::new((from, "out"), (to, port)))
}

/// A flow with `n` nodes and up to `w` distinct wires, cycles allowed.
pub fn random_flow(rng: &mut Rng8, n: usize, w: usize) -> FlowGraph {
    let mut flow = FlowGraph::new("random", "random");
    for i in 0..n {
        let spec = *SPECS.choose(rng).unwrap();
        flow.nodes.insert(
            format!("n{i:03}"),
            NodeInstance {
                spec: spec.into(),
                config: random_config(rng, spec),
            },
        );
    }
    let mut attempts = 0;
    while flow.wires.len() < w && attempts < w * 20 {
        attempts += 1;
        if let Some(wire) = random_wire(rng, &flow) {
            flow.wires.insert(wire);
        }
    }
    flow
}

/// A layered, mostly acyclic flow of exactly `n` nodes and `w` wires.
pub fn desk_scale_flow(rng: &mut Rng8, n: usize, w: usize) -> FlowGraph {
    let mut flow = FlowGraph::new("desk", "desk scale");
    let mut ids = Vec::new();
    for i in 0..n {
        let spec = if i < n / 10 {
            *["light", "smartphone", "twitter"].choose(rng).unwrap()
        } else if i >= n - n / 5 {
            *["debug", "chart-data", "export", "actuate"].choose(rng).unwrap()
        } else {
            *["function", "extract", "trigger", "combine", "chart", "function"].choose(rng).unwrap()
        };
        let id = format!("n{i:04}");
        flow.nodes.insert(
            id.clone(),
            NodeInstance {
                spec: spec.into(),
                config: random_config(rng, spec),
            },
        );
        ids.push((id, spec));
    }
    while flow.wires.len() < w {
        let j = rng.gen_range(1..n);
        let (to, spec) = &ids[j];
        let ports = input_ports(spec);
        if ports.is_empty() {
            continue;
        }
        let i = rng.gen_range(0..j);
        let (from, fspec) = &ids[i];
        if !has_output(fspec) {
            continue;
        }
        flow.wires.insert(Wire::new((from, "out"), (to, ports.choose(rng).unwrap())));
    }
    flow
}

/// A random edit against `flow`; may be rejected by `apply_edit`.
pub fn random_edit(rng: &mut Rng8, flow: &FlowGraph, counter: &mut usize) -> FlowEdit {
    let ids: Vec<&String> = flow.nodes.keys().collect();
    match rng.gen_range(0..10) {
        0..=1 => {
            *counter += 1;
            let spec = *SPECS.choose(rng).unwrap();
            FlowEdit::AddNode {
                id: format!("e{counter}"),
                spec: spec.into(),
                config: random_config(rng, spec),
            }
        }
        2 if !ids.is_empty() => FlowEdit::RemoveNode {
            id: ids.choose(rng).unwrap().to_string(),
        },
        3..=5 => match random_wire(rng, flow) {
            Some(wire) => FlowEdit::AddWire { wire },
            None => random_edit(rng, flow, counter),
        },
        6 if !flow.wires.is_empty() => {
            let wires: Vec<&Wire> = flow.wires.iter().collect();
            FlowEdit::RemoveWire {
                wire: (*wires.choose(rng).unwrap()).clone(),
            }
        }
        7..=9 if !ids.is_empty() => {
            let id = ids.choose(rng).unwrap().to_string();
            let spec = flow.nodes[&id].spec.clone();
            FlowEdit::ReconfigureNode {
                config: random_config(rng, &spec),
                id,
            }
        }
        _ => random_edit(rng, flow, counter),
    }
}

// ---- well-typed programs ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    B,
    I,
    N,
    S,
    ArrI,
    ArrN,
    ArrS,
}

impl Ty {
    fn schema(self, rng: &mut Rng8) -> SchemaDoc {
        match self {
            Ty::B => SchemaDoc::Boolean,
            Ty::I => SchemaDoc::Integer(int_range(rng)),
            Ty::N => SchemaDoc::Number(num_range(rng)),
            Ty::S => {
                if rng.gen_bool(0.5) {
                    string_enum(rng)
                } else {
                    SchemaDoc::string()
                }
            }
            Ty::ArrI => SchemaDoc::array_len(Ty::I.schema(rng), None, Some(4)),
            Ty::ArrN => SchemaDoc::array_len(Ty::N.schema(rng), None, Some(4)),
            Ty::ArrS => SchemaDoc::array_len(Ty::S.schema(rng), None, Some(4)),
        }
    }

    fn elem(self) -> Option<Ty> {
        match self {
            Ty::ArrI => Some(Ty::I),
            Ty::ArrN => Some(Ty::N),
            Ty::ArrS => Some(Ty::S),
            _ => None,
        }
    }
}

const ALL_TY: [Ty; 7] = [Ty::B, Ty::I, Ty::N, Ty::S, Ty::ArrI, Ty::ArrN, Ty::ArrS];

/// Input object schema with its fields' generator types and optionality.
pub struct ProgramInput {
    pub schema: SchemaDoc,
    fields: Vec<(String, Ty, bool)>,
}

pub fn program_input(rng: &mut Rng8) -> ProgramInput {
    let n = rng.gen_range(1..=5);
    let mut fields = Vec::new();
    let mut properties = BTreeMap::new();
    let mut required = BTreeSet::new();
    for i in 0..n {
        let ty = *ALL_TY.choose(rng).unwrap();
        let name = format!("f{i}");
        let optional = rng.gen_bool(0.25);
        properties.insert(name.clone(), ty.schema(rng));
        if !optional {
            required.insert(name.clone());
        }
        fields.push((name, ty, optional));
    }
    ProgramInput {
        schema: SchemaDoc::Object {
            properties,
            required,
        },
        fields,
    }
}

struct Gen<'a> {
    rng: &'a mut Rng8,
    input: &'a ProgramInput,
    vars: Vec<(String, Ty)>,
    next_var: usize,
}

impl Gen<'_> {
    fn lit(&mut self, ty: Ty) -> String {
        match ty {
            Ty::B => self.rng.gen_bool(0.5).to_string(),
            Ty::I => self.rng.gen_range(-9i64..=9).to_string(),
            Ty::N => format!("{:?}", self.rng.gen_range(-40..=40) as f64 / 4.0),
            Ty::S => format!("{:?}", STRINGS.choose(self.rng).unwrap()),
            arr => {
                let e = arr.elem().unwrap();
                let n = self.rng.gen_range(1..=3);
                let items: Vec<String> = (0..n).map(|_| self.lit(e)).collect();
                format!("[{}]", items.join(", "))
            }
        }
    }

    fn leaf(&mut self, ty: Ty) -> String {
        let mut options: Vec<String> = vec![self.lit(ty)];
        let fields: Vec<(String, bool)> = self
            .input
            .fields
            .iter()
            .filter(|(_, t, _)| *t == ty)
            .map(|(n, _, o)| (n.clone(), *o))
            .collect();
        for (name, optional) in fields {
            if optional {
                let d = self.lit(ty);
                options.push(format!("coalesce(msg.{name}, {d})"));
            } else {
                options.push(format!("msg.{name}"));
            }
        }
        for (v, t) in &self.vars {
            if *t == ty {
                options.push(v.clone());
            }
        }
        options.swap_remove(self.rng.gen_range(0..options.len()))
    }

    fn expr(&mut self, ty: Ty, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf(ty);
        }
        let d = depth - 1;
        match self.rng.gen_range(0..10) {
            0 => {
                let c = self.expr(Ty::B, d);
                let a = self.expr(ty, d);
                let b = self.expr(ty, d);
                return format!("(if {c} then {a} else {b})");
            }
            1 => {
                let bound = *ALL_TY.choose(self.rng).unwrap();
                let value = self.expr(bound, d);
                self.next_var += 1;
                let name = format!("v{}", self.next_var);
                self.vars.push((name.clone(), bound));
                let body = self.expr(ty, d);
                self.vars.pop();
                return format!("(let {name} = {value} in {body})");
            }
            _ => {}
        }
        match ty {
            Ty::B => match self.rng.gen_range(0..6) {
                0 => {
                    let op = ["&&", "||"].choose(self.rng).unwrap();
                    format!("({} {op} {})", self.expr(Ty::B, d), self.expr(Ty::B, d))
                }
                1 => format!("!{}", self.expr(Ty::B, d)),
                2 => {
                    let op = ["<", "<=", ">", ">="].choose(self.rng).unwrap();
                    let (l, r) = (self.numeric(d), self.numeric(d));
                    format!("({l} {op} {r})")
                }
                3 => {
                    let t = *ALL_TY.choose(self.rng).unwrap();
                    let op = ["==", "!="].choose(self.rng).unwrap();
                    format!("({} {op} {})", self.expr(t, d), self.expr(t, d))
                }
                4 => {
                    let arr = *[Ty::ArrI, Ty::ArrS, Ty::ArrN].choose(self.rng).unwrap();
                    format!("contains({}, {})", self.expr(arr, d), self.expr(arr.elem().unwrap(), d))
                }
                _ => format!("contains({}, {})", self.expr(Ty::S, d), self.expr(Ty::S, d)),
            },
            Ty::I => match self.rng.gen_range(0..6) {
                0 => {
                    let op = ["+", "-", "*", "/", "%"].choose(self.rng).unwrap();
                    format!("({} {op} {})", self.expr(Ty::I, d), self.expr(Ty::I, d))
                }
                1 => {
                    let t = *[Ty::S, Ty::ArrI, Ty::ArrN, Ty::ArrS].choose(self.rng).unwrap();
                    format!("len({})", self.expr(t, d))
                }
                2 => format!("abs({})", self.expr(Ty::I, d)),
                3 => format!("round({})", self.numeric(d)),
                4 => {
                    let f = ["min", "max"].choose(self.rng).unwrap();
                    format!("{f}({}, {})", self.expr(Ty::I, d), self.expr(Ty::I, d))
                }
                _ => format!("-{}", self.expr(Ty::I, d)),
            },
            Ty::N => match self.rng.gen_range(0..4) {
                0 => {
                    let op = ["+", "-", "*", "/"].choose(self.rng).unwrap();
                    let l = self.expr(Ty::N, d);
                    format!("({l} {op} {})", self.numeric(d))
                }
                1 => format!("abs({})", self.expr(Ty::N, d)),
                2 => {
                    let f = ["min", "max"].choose(self.rng).unwrap();
                    format!("{f}({}, {})", self.expr(Ty::N, d), self.numeric(d))
                }
                _ => format!("-{}", self.expr(Ty::N, d)),
            },
            Ty::S => format!("({} + {})", self.expr(Ty::S, d), self.expr(Ty::S, d)),
            arr => {
                let e = arr.elem().unwrap();
                let n = self.rng.gen_range(0..=3);
                if n == 0 {
                    return self.leaf(arr);
                }
                let items: Vec<String> = (0..n).map(|_| self.expr(e, d)).collect();
                format!("[{}]", items.join(", "))
            }
        }
    }

    fn numeric(&mut self, depth: u32) -> String {
        let t = *[Ty::I, Ty::N].choose(self.rng).unwrap();
        self.expr(t, depth)
    }
}

/// Source text of a program over `input` that should type-check. The
/// result is an object of a few generated fields or a bare value.
pub fn well_typed_program(rng: &mut Rng8, input: &ProgramInput) -> String {
    let depth = rng.gen_range(1..=4);
    let mut g = Gen {
        rng,
        input,
        vars: Vec::new(),
        next_var: 0,
    };
    if g.rng.gen_bool(0.5) {
        let ty = *ALL_TY.choose(g.rng).unwrap();
        g.expr(ty, depth)
    } else {
        let n = g.rng.gen_range(1..=3);
        let fields: Vec<String> = (0..n)
            .map(|i| {
                let ty = *ALL_TY.choose(g.rng).unwrap();
                format!("out{i}: {}", g.expr(ty, depth))
            })
            .collect();
        format!("{{{}}}", fields.join(", "))
    }
}
