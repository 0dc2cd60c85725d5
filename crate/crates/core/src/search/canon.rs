//! Canonical renumbering of engine-added objects so that structurally
//! identical solutions compare equal regardless of the order in which the
//! search created them.
//!
//! Added objects are renamed via color refinement: existing objects keep
//! their (unique, stable) serials as anchors, added objects start from a
//! kind/tag/type color and are refined against their neighborhoods until
//! stable, then reordered by final color with the old serial as tiebreak.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{InstanceGraph, Namespace, ObjectId};

fn initial_colors(
    graph: &InstanceGraph,
    added_acts: &BTreeSet<ObjectId>,
    added_msgs: &BTreeSet<ObjectId>,
) -> BTreeMap<ObjectId, String> {
    let mut colors = BTreeMap::new();
    for a in &graph.activities {
        let c = if added_acts.contains(&a.id) {
            format!("act|{}|{}", a.kind.name(), a.role_tag.as_deref().unwrap_or(""))
        } else {
            format!("ext-act|{}", a.id.serial)
        };
        colors.insert(a.id, c);
    }
    for m in &graph.messages {
        let c = if added_msgs.contains(&m.id) {
            format!("msg|{}", m.data_type.as_deref().unwrap_or("<untyped>"))
        } else {
            format!("ext-msg|{}", m.id.serial)
        };
        colors.insert(m.id, c);
    }
    colors
}

fn refine(graph: &InstanceGraph, colors: &BTreeMap<ObjectId, String>) -> BTreeMap<ObjectId, String> {
    let mut next = BTreeMap::new();
    for a in &graph.activities {
        let mut env: Vec<String> = Vec::new();
        for m in &graph.messages {
            if m.consumer == Some(a.id) {
                env.push(format!("in:{}", colors[&m.id]));
            }
            if m.producer == Some(a.id) {
                env.push(format!("out:{}", colors[&m.id]));
            }
        }
        env.sort();
        next.insert(a.id, format!("{}#{}", colors[&a.id], env.join(",")));
    }
    for m in &graph.messages {
        let p = m
            .producer
            .map(|p| colors[&p].clone())
            .unwrap_or_else(|| "-".to_string());
        let c = m
            .consumer
            .map(|c| colors[&c].clone())
            .unwrap_or_else(|| "-".to_string());
        next.insert(m.id, format!("{}#p:{p}#c:{c}", colors[&m.id]));
    }
    next
}

/// Renumbers and renames added objects in place; `added_acts`/`added_msgs`
/// are rewritten to the new ids. Added objects must occupy the tail of each
/// object vector (they always do: search only appends).
pub fn canonicalize(
    graph: &mut InstanceGraph,
    added_acts: &mut BTreeSet<ObjectId>,
    added_msgs: &mut BTreeSet<ObjectId>,
) {
    let n_added = added_acts.len() + added_msgs.len();
    if n_added == 0 {
        return;
    }
    let mut colors = initial_colors(graph, added_acts, added_msgs);
    for _ in 0..=n_added {
        colors = refine(graph, &colors);
    }

    // Sort each added block by (final color, old serial) and renumber within
    // the block; existing objects keep their serials.
    let mut remap: BTreeMap<ObjectId, ObjectId> = BTreeMap::new();
    let act_base = graph.activities.len() - added_acts.len();
    let msg_base = graph.messages.len() - added_msgs.len();
    debug_assert!(added_acts.iter().all(|a| (a.serial as usize) >= act_base));
    debug_assert!(added_msgs.iter().all(|m| (m.serial as usize) >= msg_base));

    let mut acts: Vec<ObjectId> = added_acts.iter().copied().collect();
    acts.sort_by(|a, b| colors[a].cmp(&colors[b]).then(a.serial.cmp(&b.serial)));
    for (i, old) in acts.iter().enumerate() {
        remap.insert(*old, ObjectId::activity((act_base + i) as u32));
    }
    let mut msgs: Vec<ObjectId> = added_msgs.iter().copied().collect();
    msgs.sort_by(|a, b| colors[a].cmp(&colors[b]).then(a.serial.cmp(&b.serial)));
    for (i, old) in msgs.iter().enumerate() {
        remap.insert(*old, ObjectId::message((msg_base + i) as u32));
    }

    let map = |id: ObjectId| remap.get(&id).copied().unwrap_or(id);
    for a in &mut graph.activities {
        a.id = map(a.id);
        if a.id.serial as usize >= act_base {
            a.name = format!("added_a{}", a.id.serial as usize - act_base);
        }
    }
    for m in &mut graph.messages {
        m.id = map(m.id);
        m.producer = m.producer.map(map);
        m.consumer = m.consumer.map(map);
        if m.id.serial as usize >= msg_base {
            m.name = format!("added_m{}", m.id.serial as usize - msg_base);
        }
    }
    graph.activities.sort_by_key(|a| a.id.serial);
    graph.messages.sort_by_key(|m| m.id.serial);
    *added_acts = acts
        .iter()
        .map(|old| remap[old])
        .collect();
    *added_msgs = msgs
        .iter()
        .map(|old| remap[old])
        .collect();
    debug_assert!(graph
        .activities
        .iter()
        .enumerate()
        .all(|(i, a)| a.id == ObjectId::activity(i as u32) && a.id.namespace == Namespace::Activity));
}

/// Stable structural key of a canonicalized graph, used for deduplication.
pub fn canonical_key(graph: &InstanceGraph) -> String {
    let mut parts = Vec::new();
    for a in &graph.activities {
        parts.push(format!(
            "A{}|{}|{}|{}|{}|{}",
            a.id.serial,
            a.name,
            a.kind.name(),
            a.owner.serial,
            a.active,
            a.role_tag.as_deref().unwrap_or("")
        ));
    }
    for m in &graph.messages {
        parts.push(format!(
            "M{}|{}|{}|{}|{}|{}|{}|{:?}",
            m.id.serial,
            m.name,
            m.data_type.as_deref().unwrap_or("-"),
            m.active,
            m.order,
            m.producer.map(|p| p.serial as i64).unwrap_or(-1),
            m.consumer.map(|c| c.serial as i64).unwrap_or(-1),
            m.attributes
        ));
    }
    parts.join("\n")
}
