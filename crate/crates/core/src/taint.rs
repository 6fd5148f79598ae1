//! Personal-data labels and their propagation over flow wires.
//!
//! Each wire carries a [`PersonalLabel`], a set of [`PersonalAtom`]s. Node
//! specs declare a monotone [`LabelTransfer`] per output port and
//! [`propagate_labels`] computes the least fixpoint of the resulting
//! equations with a worklist. Cycles are fine: the atom universe is finite
//! and every transfer is monotone.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::flow::{FlowGraph, NodeSpec, Registry, Role, Wire};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Identifier,
    Sensitive,
    Personal,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Identifier => "identifier",
            Category::Sensitive => "sensitive",
            Category::Personal => "personal",
        }
    }

    /// Editor badge letter.
    pub fn badge(self) -> char {
        match self {
            Category::Identifier => 'I',
            Category::Sensitive => 'S',
            Category::Personal => 'P',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Derivation {
    Primary,
    Secondary,
}

/// When an inferred (secondary) atom becomes possible.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Active when the node's configured `period_ms` is at most this many ms.
    GranularityAtMost(u64),
    /// Active when the incoming label already has an atom with this tag.
    RequiresAtom(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonalAtom {
    #[serde(rename = "cat")]
    pub category: Category,
    pub tag: String,
    pub derivation: Derivation,
    #[serde(default)]
    pub conditions: Vec<Condition>,
}

impl PersonalAtom {
    pub fn primary(category: Category, tag: &str) -> Self {
        PersonalAtom {
            category,
            tag: tag.into(),
            derivation: Derivation::Primary,
            conditions: Vec::new(),
        }
    }

    pub fn secondary(category: Category, tag: &str, conditions: Vec<Condition>) -> Self {
        let mut conditions = conditions;
        conditions.sort();
        conditions.dedup();
        PersonalAtom {
            category,
            tag: tag.into(),
            derivation: Derivation::Secondary,
            conditions,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.derivation {
            Derivation::Primary if !self.conditions.is_empty() => {
                Err(format!("primary atom `{}` carries conditions", self.tag))
            }
            Derivation::Secondary if self.conditions.is_empty() => {
                Err(format!("secondary atom `{}` has no conditions", self.tag))
            }
            _ => self
                .conditions
                .iter()
                .try_for_each(|c| match c {
                    Condition::GranularityAtMost(0) => {
                        Err(format!("atom `{}`: granularity threshold must be positive", self.tag))
                    }
                    _ => Ok(()),
                }),
        }
    }
}

impl fmt::Display for PersonalAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.category.name(), self.tag)?;
        if self.derivation == Derivation::Secondary {
            f.write_str("*")?;
        }
        Ok(())
    }
}

pub type PersonalLabel = BTreeSet<PersonalAtom>;

/// Per-output-port label behaviour of a node spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transfer", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LabelTransfer {
    /// Datasources: the declared atoms, ignoring input.
    Emit { atoms: Vec<PersonalAtom> },
    /// Input label plus the declared atoms.
    PassthroughPlus { atoms: Vec<PersonalAtom> },
    /// Input label minus atoms matching a category or tag. `config_key`
    /// names a config list of further categories/tags to drop.
    Filter {
        #[serde(default)]
        drop_categories: BTreeSet<Category>,
        #[serde(default)]
        drop_tags: BTreeSet<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config_key: Option<String>,
    },
    /// Declared anonymiser: nothing personal leaves.
    Clear,
    /// Choose a transfer by the string value of a config key.
    ByConfig {
        key: String,
        cases: BTreeMap<String, LabelTransfer>,
        otherwise: Box<LabelTransfer>,
    },
}

impl LabelTransfer {
    pub fn emit(atoms: Vec<PersonalAtom>) -> Self {
        LabelTransfer::Emit { atoms }
    }

    pub fn passthrough() -> Self {
        LabelTransfer::PassthroughPlus { atoms: vec![] }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            LabelTransfer::Emit { atoms } | LabelTransfer::PassthroughPlus { atoms } => {
                atoms.iter().try_for_each(PersonalAtom::validate)
            }
            LabelTransfer::ByConfig {
                cases, otherwise, ..
            } => {
                cases.values().try_for_each(LabelTransfer::validate)?;
                otherwise.validate()
            }
            _ => Ok(()),
        }
    }

    /// Every atom this transfer can ever add.
    pub fn declared_atoms(&self) -> Vec<&PersonalAtom> {
        match self {
            LabelTransfer::Emit { atoms } | LabelTransfer::PassthroughPlus { atoms } => {
                atoms.iter().collect()
            }
            LabelTransfer::ByConfig {
                cases, otherwise, ..
            } => cases
                .values()
                .chain(std::iter::once(otherwise.as_ref()))
                .flat_map(|t| t.declared_atoms())
                .collect(),
            _ => vec![],
        }
    }

    pub fn apply(&self, config: &Value, input: &PersonalLabel) -> PersonalLabel {
        match self {
            LabelTransfer::Emit { atoms } => with_declared(PersonalLabel::new(), atoms, config, input),
            LabelTransfer::PassthroughPlus { atoms } => with_declared(input.clone(), atoms, config, input),
            LabelTransfer::Filter {
                drop_categories,
                drop_tags,
                config_key,
            } => {
                let extra: Vec<&str> = config_key
                    .as_ref()
                    .and_then(|k| config.get(k))
                    .and_then(Value::as_array)
                    .map(|a| a.iter().filter_map(Value::as_str).collect())
                    .unwrap_or_default();
                input
                    .iter()
                    .filter(|a| {
                        !(drop_categories.contains(&a.category)
                            || drop_tags.contains(&a.tag)
                            || extra.contains(&a.category.name())
                            || extra.contains(&a.tag.as_str()))
                    })
                    .cloned()
                    .collect()
            }
            LabelTransfer::Clear => PersonalLabel::new(),
            LabelTransfer::ByConfig {
                key,
                cases,
                otherwise,
            } => config
                .get(key)
                .and_then(Value::as_str)
                .and_then(|v| cases.get(v))
                .unwrap_or(otherwise)
                .apply(config, input),
        }
    }
}

/// Add primaries, then secondaries whose conditions hold, until stable.
/// Conditions see the input label plus everything emitted so far.
fn with_declared(
    mut out: PersonalLabel,
    atoms: &[PersonalAtom],
    config: &Value,
    input: &PersonalLabel,
) -> PersonalLabel {
    out.extend(
        atoms
            .iter()
            .filter(|a| a.derivation == Derivation::Primary)
            .cloned(),
    );
    loop {
        let mut changed = false;
        for a in atoms.iter().filter(|a| a.derivation == Derivation::Secondary) {
            if !out.contains(a)
                && a.conditions
                    .iter()
                    .all(|c| condition_active(c, config, input, &out))
            {
                out.insert(a.clone());
                changed = true;
            }
        }
        if !changed {
            return out;
        }
    }
}

pub fn condition_active(
    cond: &Condition,
    config: &Value,
    input: &PersonalLabel,
    emitted: &PersonalLabel,
) -> bool {
    match cond {
        Condition::GranularityAtMost(limit) => config
            .get("period_ms")
            .and_then(Value::as_u64)
            .is_some_and(|p| p <= *limit),
        Condition::RequiresAtom(tag) => input.iter().chain(emitted).any(|a| &a.tag == tag),
    }
}

fn default_transfer(spec: &NodeSpec) -> LabelTransfer {
    match spec.role {
        Role::Datasource => LabelTransfer::emit(vec![]),
        _ => LabelTransfer::passthrough(),
    }
}

/// Label on each output port of a node given its merged input label.
pub fn node_transfer(
    spec: &NodeSpec,
    config: &Value,
    input: &PersonalLabel,
) -> BTreeMap<String, PersonalLabel> {
    spec.outputs
        .iter()
        .map(|port| {
            let label = match &port.labels {
                Some(t) => t.apply(config, input),
                None => default_transfer(spec).apply(config, input),
            };
            (port.name.clone(), label)
        })
        .collect()
}

/// Wire → label map. Serializes as `{"wires": [{from, to, atoms}]}`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap(pub BTreeMap<Wire, PersonalLabel>);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelMapFile {
    wires: Vec<WireLabel>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireLabel {
    from: crate::flow::Endpoint,
    to: crate::flow::Endpoint,
    atoms: Vec<PersonalAtom>,
}

impl Serialize for LabelMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LabelMapFile {
            wires: self
                .0
                .iter()
                .map(|(w, l)| WireLabel {
                    from: w.from.clone(),
                    to: w.to.clone(),
                    atoms: l.iter().cloned().collect(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = LabelMapFile::deserialize(d)?;
        Ok(LabelMap(
            file.wires
                .into_iter()
                .map(|w| {
                    (
                        Wire {
                            from: w.from,
                            to: w.to,
                        },
                        w.atoms.into_iter().collect(),
                    )
                })
                .collect(),
        ))
    }
}

impl LabelMap {
    pub fn get(&self, wire: &Wire) -> Option<&PersonalLabel> {
        self.0.get(wire)
    }

    /// Union of the labels on wires entering `node`.
    pub fn input_label(&self, flow: &FlowGraph, node: &str) -> PersonalLabel {
        flow.incoming(node)
            .filter_map(|w| self.0.get(w))
            .flatten()
            .cloned()
            .collect()
    }
}

/// Badge letters (P, S, I) a wire shows: one per category present.
pub fn badges(label: &PersonalLabel) -> BTreeSet<char> {
    label.iter().map(|a| a.category.badge()).collect()
}

/// Least fixpoint of the wire-label equations, by worklist.
pub fn propagate_labels(flow: &FlowGraph, registry: &Registry) -> LabelMap {
    let mut incoming: BTreeMap<&str, Vec<&Wire>> = BTreeMap::new();
    let mut outgoing: BTreeMap<&str, Vec<&Wire>> = BTreeMap::new();
    for w in &flow.wires {
        incoming.entry(&w.to.node).or_default().push(w);
        outgoing.entry(&w.from.node).or_default().push(w);
    }
    let mut labels: BTreeMap<&Wire, PersonalLabel> =
        flow.wires.iter().map(|w| (w, PersonalLabel::new())).collect();
    let mut queue: VecDeque<&str> = flow.nodes.keys().map(String::as_str).collect();
    let mut queued: BTreeSet<&str> = queue.iter().copied().collect();
    while let Some(node) = queue.pop_front() {
        queued.remove(node);
        let Some(inst) = flow.nodes.get(node) else { continue };
        let Some(spec) = registry.get(&inst.spec) else { continue };
        let input: PersonalLabel = incoming
            .get(node)
            .into_iter()
            .flatten()
            .flat_map(|w| labels[w].iter().cloned())
            .collect();
        let out = node_transfer(spec, &inst.config, &input);
        for w in outgoing.get(node).into_iter().flatten() {
            let Some(new) = out.get(&w.from.port) else { continue };
            let slot = labels.get_mut(w).expect("every wire has a slot");
            if slot != new {
                *slot = new.clone();
                if queued.insert(&w.to.node) {
                    queue.push_back(&w.to.node);
                }
            }
        }
    }
    LabelMap(labels.into_iter().map(|(w, l)| (w.clone(), l)).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LabelDiff {
    pub added: PersonalLabel,
    pub removed: PersonalLabel,
}

/// Per-wire set differences; wires missing from one side count as empty.
pub fn diff_labels(before: &LabelMap, after: &LabelMap) -> BTreeMap<Wire, LabelDiff> {
    let empty = PersonalLabel::new();
    let wires: BTreeSet<&Wire> = before.0.keys().chain(after.0.keys()).collect();
    wires
        .into_iter()
        .filter_map(|w| {
            let b = before.0.get(w).unwrap_or(&empty);
            let a = after.0.get(w).unwrap_or(&empty);
            let diff = LabelDiff {
                added: a.difference(b).cloned().collect(),
                removed: b.difference(a).cloned().collect(),
            };
            (!diff.added.is_empty() || !diff.removed.is_empty()).then(|| (w.clone(), diff))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PersonalSummary {
    /// Output-role node → union of labels entering it.
    pub outputs: BTreeMap<String, PersonalLabel>,
    /// The subset of `outputs` that export data off the box.
    pub exports: BTreeMap<String, PersonalLabel>,
    pub app: PersonalLabel,
}

pub fn summarize_personal_data(flow: &FlowGraph, registry: &Registry, labels: &LabelMap) -> PersonalSummary {
    let mut summary = PersonalSummary::default();
    for (id, inst) in &flow.nodes {
        let Some(spec) = registry.get(&inst.spec) else { continue };
        if spec.role != Role::Output {
            continue;
        }
        let label = labels.input_label(flow, id);
        summary.app.extend(label.iter().cloned());
        if spec.effects.exports_off_box.applies(&inst.config) {
            summary.exports.insert(id.clone(), label.clone());
        }
        summary.outputs.insert(id.clone(), label);
    }
    summary
}
