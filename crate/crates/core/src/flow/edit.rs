use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{validate_node, validate_wire, FlowError, FlowGraph, NodeInstance, Registry, Wire};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FlowEdit {
    AddNode {
        id: String,
        spec: String,
        config: Value,
    },
    RemoveNode {
        id: String,
    },
    AddWire {
        wire: Wire,
    },
    RemoveWire {
        wire: Wire,
    },
    ReconfigureNode {
        id: String,
        config: Value,
    },
}

/// What an edit may have invalidated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChangeSet {
    /// Downstream closure of the edit site, in the edited graph.
    pub nodes: BTreeSet<String>,
    /// Wires leaving changed nodes, plus any added wire.
    pub wires: BTreeSet<Wire>,
    pub removed_nodes: BTreeSet<String>,
    pub removed_wires: BTreeSet<Wire>,
}

/// Apply one edit atomically; the input graph is never modified.
pub fn apply_edit(
    flow: &FlowGraph,
    edit: &FlowEdit,
    registry: &Registry,
) -> Result<(FlowGraph, ChangeSet), FlowError> {
    let mut next = flow.clone();
    let mut changes = ChangeSet::default();
    let sites: Vec<String> = match edit {
        FlowEdit::AddNode { id, spec, config } => {
            if next.nodes.contains_key(id) {
                return Err(FlowError::DuplicateNode(id.clone()));
            }
            let inst = NodeInstance {
                spec: spec.clone(),
                config: config.clone(),
            };
            validate_node(id, &inst, registry)?;
            next.nodes.insert(id.clone(), inst);
            vec![id.clone()]
        }
        FlowEdit::RemoveNode { id } => {
            if next.nodes.remove(id).is_none() {
                return Err(FlowError::UnknownNode(id.clone()));
            }
            let attached: Vec<Wire> = next
                .wires
                .iter()
                .filter(|w| &w.from.node == id || &w.to.node == id)
                .cloned()
                .collect();
            let mut sites = Vec::new();
            for w in attached {
                next.wires.remove(&w);
                if &w.to.node != id {
                    sites.push(w.to.node.clone());
                }
                // upstream nodes lose a consumer
                if &w.from.node != id {
                    sites.push(w.from.node.clone());
                }
                changes.removed_wires.insert(w);
            }
            changes.removed_nodes.insert(id.clone());
            sites
        }
        FlowEdit::AddWire { wire } => {
            if next.wires.contains(wire) {
                return Err(FlowError::DuplicateWire(wire.clone()));
            }
            validate_wire(&next, wire, registry)?;
            next.wires.insert(wire.clone());
            changes.wires.insert(wire.clone());
            vec![wire.from.node.clone(), wire.to.node.clone()]
        }
        FlowEdit::RemoveWire { wire } => {
            if !next.wires.remove(wire) {
                return Err(FlowError::MissingWire(wire.clone()));
            }
            changes.removed_wires.insert(wire.clone());
            vec![wire.from.node.clone(), wire.to.node.clone()]
        }
        FlowEdit::ReconfigureNode { id, config } => {
            let node = next
                .nodes
                .get_mut(id)
                .ok_or_else(|| FlowError::UnknownNode(id.clone()))?;
            let inst = NodeInstance {
                spec: node.spec.clone(),
                config: config.clone(),
            };
            validate_node(id, &inst, registry)?;
            *node = inst;
            vec![id.clone()]
        }
    };
    changes.nodes = next.downstream(sites.iter().map(String::as_str));
    for w in &next.wires {
        if changes.nodes.contains(&w.from.node) {
            changes.wires.insert(w.clone());
        }
    }
    Ok((next, changes))
}
