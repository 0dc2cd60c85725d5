//! Candidate finalization shared by the engine and the exhaustive oracle:
//! order assignment, canonical activation, attribute flow and the full
//! validity predicate.
//!
//! Activation is canonical: per goal type the lowest-serial qualifying
//! final-node input is chosen as the support seed, and at a merge the
//! lowest-serial activatable input is chosen. Solutions where an added
//! object (or a message wired by the composition) falls outside the
//! resulting support set are rejected; the engine never builds such glue.

use std::collections::{BTreeMap, BTreeSet};

use crate::constraints::{check_all, check_goal};
use crate::model::{ActivityKind, InstanceGraph, Message, ObjectId};
use crate::ontology::{AttrValue, TypeId};

use super::Problem;

/// Concrete types eligible for search-created messages: every concrete type
/// lying below a type mentioned in pins, catalog, goals or user inputs.
pub fn relevant_types(problem: &Problem) -> Vec<TypeId> {
    let mut mentioned: BTreeSet<&str> = BTreeSet::new();
    for m in &problem.fragments.messages {
        if let Some(t) = &m.data_type {
            mentioned.insert(t);
        }
    }
    for sig in &problem.catalog {
        for t in &sig.input_types {
            mentioned.insert(t);
        }
        mentioned.insert(&sig.output_type);
    }
    for t in &problem.policy.goal_types {
        mentioned.insert(t);
    }
    for t in &problem.policy.user_input_types {
        mentioned.insert(t);
    }
    let mut out = Vec::new();
    for ty in problem.ontology.type_ids() {
        if problem.ontology.is_abstract(ty).unwrap_or(true) {
            continue;
        }
        let relevant = mentioned
            .iter()
            .any(|m| problem.ontology.is_subtype(ty, m).unwrap_or(false));
        if relevant {
            out.push(ty.clone());
        }
    }
    out
}

/// Longest chain of added transformations linked through added objects.
pub fn transformation_depth(graph: &InstanceGraph, added_acts: &BTreeSet<ObjectId>) -> u32 {
    fn chain_msg(
        graph: &InstanceGraph,
        added_acts: &BTreeSet<ObjectId>,
        m: &Message,
        memo: &mut BTreeMap<ObjectId, u32>,
    ) -> u32 {
        let p = match m.producer {
            Some(p) if added_acts.contains(&p) => p,
            _ => return 0,
        };
        let node = graph.activity(p).unwrap();
        if node.kind == ActivityKind::Transformation {
            depth_act(graph, added_acts, p, memo)
        } else {
            graph
                .messages
                .iter()
                .filter(|m2| m2.consumer == Some(p))
                .map(|m2| chain_msg(graph, added_acts, m2, memo))
                .max()
                .unwrap_or(0)
        }
    }

    fn depth_act(
        graph: &InstanceGraph,
        added_acts: &BTreeSet<ObjectId>,
        t: ObjectId,
        memo: &mut BTreeMap<ObjectId, u32>,
    ) -> u32 {
        if let Some(&d) = memo.get(&t) {
            return d;
        }
        let d = 1 + graph
            .messages
            .iter()
            .filter(|m| m.consumer == Some(t))
            .map(|m| chain_msg(graph, added_acts, m, memo))
            .max()
            .unwrap_or(0);
        memo.insert(t, d);
        d
    }

    let mut memo = BTreeMap::new();
    added_acts
        .iter()
        .filter(|a| graph.activity(**a).map(|n| n.kind) == Some(ActivityKind::Transformation))
        .map(|a| depth_act(graph, added_acts, *a, &mut memo))
        .max()
        .unwrap_or(0)
}

struct Activation<'a> {
    graph: &'a InstanceGraph,
    activatable_msg: BTreeMap<ObjectId, bool>,
    activatable_act: BTreeMap<ObjectId, bool>,
    active_msgs: BTreeSet<ObjectId>,
    active_acts: BTreeSet<ObjectId>,
}

impl<'a> Activation<'a> {
    fn new(graph: &'a InstanceGraph) -> Self {
        Activation {
            graph,
            activatable_msg: BTreeMap::new(),
            activatable_act: BTreeMap::new(),
            active_msgs: BTreeSet::new(),
            active_acts: BTreeSet::new(),
        }
    }

    fn msg_activatable(&mut self, id: ObjectId) -> bool {
        if let Some(&v) = self.activatable_msg.get(&id) {
            return v;
        }
        let v = match self.graph.message(id).and_then(|m| m.producer) {
            Some(p) => self.act_activatable(p),
            None => false,
        };
        self.activatable_msg.insert(id, v);
        v
    }

    fn act_activatable(&mut self, id: ObjectId) -> bool {
        if let Some(&v) = self.activatable_act.get(&id) {
            return v;
        }
        let node = match self.graph.activity(id) {
            Some(n) => n,
            None => return false,
        };
        let inputs: Vec<ObjectId> = self
            .graph
            .messages
            .iter()
            .filter(|m| m.consumer == Some(id))
            .map(|m| m.id)
            .collect();
        let v = match node.kind {
            ActivityKind::InitialNode | ActivityKind::ExternalSignal => true,
            ActivityKind::Merge => {
                let mut any = false;
                for m in &inputs {
                    if self.msg_activatable(*m) {
                        any = true;
                        break;
                    }
                }
                any
            }
            _ => {
                let mut all = true;
                for m in &inputs {
                    if !self.msg_activatable(*m) {
                        all = false;
                        break;
                    }
                }
                all
            }
        };
        self.activatable_act.insert(id, v);
        v
    }

    fn need_msg(&mut self, id: ObjectId) -> bool {
        if self.active_msgs.contains(&id) {
            return true;
        }
        if !self.msg_activatable(id) {
            return false;
        }
        self.active_msgs.insert(id);
        let p = self.graph.message(id).unwrap().producer.unwrap();
        self.need_act(p)
    }

    fn need_act(&mut self, id: ObjectId) -> bool {
        if self.active_acts.contains(&id) {
            return true;
        }
        self.active_acts.insert(id);
        let node = self.graph.activity(id).unwrap();
        let inputs: Vec<ObjectId> = self
            .graph
            .messages
            .iter()
            .filter(|m| m.consumer == Some(id))
            .map(|m| m.id)
            .collect();
        match node.kind {
            ActivityKind::InitialNode | ActivityKind::ExternalSignal => true,
            ActivityKind::Merge => {
                let pick = inputs.iter().find(|m| self.msg_activatable(**m)).copied();
                match pick {
                    Some(m) => self.need_msg(m),
                    None => false,
                }
            }
            _ => inputs.iter().all(|m| self.need_msg(*m)),
        }
    }
}

/// Computes the canonical activation assignment in place. Returns false when
/// a goal has no activatable support under the canonical choices.
pub fn propagate_activation(graph: &mut InstanceGraph, problem: &Problem) -> bool {
    if problem.policy.robust {
        for a in &mut graph.activities {
            a.active = true;
        }
        for m in &mut graph.messages {
            m.active = true;
        }
        return true;
    }
    let comp = match graph.composition_workflow() {
        Some(w) => w.id,
        None => return false,
    };
    let mut act = Activation::new(graph);
    let mut seed_finals = Vec::new();
    for g in &problem.policy.goal_types {
        let seed = graph.messages.iter().find(|m| {
            let consumer = match m.consumer.and_then(|c| graph.activity(c)) {
                Some(c) => c,
                None => return false,
            };
            consumer.kind == ActivityKind::FinalNode
                && consumer.owner == comp
                && m.data_type
                    .as_ref()
                    .map(|t| problem.ontology.is_subtype(t, g).unwrap_or(false))
                    .unwrap_or(false)
        });
        let seed = match seed {
            Some(m) => m,
            None => return false,
        };
        if !act.need_msg(seed.id) {
            return false;
        }
        seed_finals.push(seed.consumer.unwrap());
    }
    let active_msgs = act.active_msgs;
    let mut active_acts = act.active_acts;
    active_acts.extend(seed_finals);
    for a in &mut graph.activities {
        a.active = active_acts.contains(&a.id);
    }
    for m in &mut graph.messages {
        m.active = active_msgs.contains(&m.id);
    }
    true
}

/// Deterministic attribute flow: forked copies inherit from the fork input,
/// transformation outputs inherit same-named same-kinded attributes from
/// their inputs, then every remaining unset slot takes the kind default.
fn fill_attributes(graph: &mut InstanceGraph, problem: &Problem, added_acts: &BTreeSet<ObjectId>) {
    let mut order: Vec<ObjectId> = graph.messages.iter().map(|m| m.id).collect();
    order.sort_by_key(|id| (graph.message(*id).unwrap().order, id.serial));
    for id in order {
        let m = graph.message(id).unwrap();
        let ty = match &m.data_type {
            Some(t) => t.clone(),
            None => continue,
        };
        let schema = match problem.ontology.attributes_of(&ty) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let producer = m.producer.filter(|p| added_acts.contains(p));
        let mut inherited: BTreeMap<String, AttrValue> = BTreeMap::new();
        if let Some(p) = producer {
            let kind = graph.activity(p).unwrap().kind;
            if matches!(kind, ActivityKind::Fork | ActivityKind::Transformation) {
                for src in graph.messages.iter().filter(|m2| m2.consumer == Some(p)) {
                    for (name, value) in &src.attributes {
                        if let Some(k) = schema.get(name) {
                            if value.matches(k) && !inherited.contains_key(name) {
                                inherited.insert(name.clone(), value.clone());
                            }
                        }
                    }
                }
            }
        }
        let m = graph.message_mut(id).unwrap();
        for (name, kind) in &schema {
            if !m.attributes.contains_key(name) {
                let value = inherited
                    .remove(name)
                    .unwrap_or_else(|| AttrValue::default_for(kind));
                m.attributes.insert(name.clone(), value);
            }
        }
    }
}

/// Every added object must serve the solution. The useful set is the closure
/// of the existing objects plus the per-goal delivery messages under two
/// rules: an active useful message enlists its producer and consumer, and a
/// useful activity enlists its inputs. This rejects padding — disconnected
/// final nodes, surplus fork copies — that otherwise passes every rule once
/// the robust policy activates the whole graph.
fn all_added_useful(
    problem: &Problem,
    graph: &InstanceGraph,
    added_acts: &BTreeSet<ObjectId>,
    added_msgs: &BTreeSet<ObjectId>,
) -> bool {
    let comp = match graph.composition_workflow() {
        Some(w) => w.id,
        None => return false,
    };
    let mut useful_acts: BTreeSet<ObjectId> = graph
        .activities
        .iter()
        .map(|a| a.id)
        .filter(|id| !added_acts.contains(id))
        .collect();
    let mut useful_msgs: BTreeSet<ObjectId> = graph
        .messages
        .iter()
        .map(|m| m.id)
        .filter(|id| !added_msgs.contains(id))
        .collect();
    // Same per-goal delivery pick as activation seeding.
    for g in &problem.policy.goal_types {
        let seed = graph.messages.iter().find(|m| {
            let consumer = match m.consumer.and_then(|c| graph.activity(c)) {
                Some(c) => c,
                None => return false,
            };
            consumer.kind == ActivityKind::FinalNode
                && consumer.owner == comp
                && m.data_type
                    .as_ref()
                    .map(|t| problem.ontology.is_subtype(t, g).unwrap_or(false))
                    .unwrap_or(false)
        });
        if let Some(seed) = seed {
            useful_msgs.insert(seed.id);
        }
    }
    loop {
        let mut changed = false;
        for m in &graph.messages {
            if m.active && useful_msgs.contains(&m.id) {
                for endpoint in [m.producer, m.consumer].into_iter().flatten() {
                    changed |= useful_acts.insert(endpoint);
                }
            }
        }
        // A useful activity enlists the inputs its function requires; final
        // nodes require none, so surplus deliveries stay unjustified.
        for m in &graph.messages {
            let consumer = m.consumer.and_then(|c| graph.activity(c));
            let required = consumer.is_some_and(|c| {
                c.kind != ActivityKind::FinalNode && useful_acts.contains(&c.id)
            });
            if required {
                changed |= useful_msgs.insert(m.id);
            }
        }
        if !changed {
            break;
        }
    }
    added_acts.iter().all(|id| useful_acts.contains(id))
        && added_msgs.iter().all(|id| useful_msgs.contains(id))
}

/// Full validity predicate over a structurally complete candidate. Returns
/// the resolved graph (orders, activation, attributes) when valid.
pub fn finalize_candidate(
    problem: &Problem,
    graph: &InstanceGraph,
    added_acts: &BTreeSet<ObjectId>,
    added_msgs: &BTreeSet<ObjectId>,
) -> Option<InstanceGraph> {
    if added_acts.len() as u32 > problem.bounds.max_added_activities {
        return None;
    }
    if added_msgs.len() as u32 > problem.bounds.max_added_messages {
        return None;
    }
    let mut graph = graph.clone();
    if graph.assign_orders().is_err() {
        return None;
    }
    if transformation_depth(&graph, added_acts) > problem.bounds.max_transformation_depth {
        return None;
    }
    if !propagate_activation(&mut graph, problem) {
        return None;
    }
    // Every added object, and every existing message wired to an added
    // activity, must lie on the goal support.
    for id in added_acts {
        if !graph.activity(*id).map(|a| a.active).unwrap_or(false) {
            return None;
        }
    }
    for m in &graph.messages {
        let added = added_msgs.contains(&m.id);
        let comp_wired = m.producer.map(|p| added_acts.contains(&p)).unwrap_or(false)
            || m.consumer.map(|c| added_acts.contains(&c)).unwrap_or(false);
        if (added || comp_wired) && !m.active {
            return None;
        }
    }
    if !all_added_useful(problem, &graph, added_acts, added_msgs) {
        return None;
    }
    fill_attributes(&mut graph, problem, added_acts);
    if !check_all(&graph, &problem.ontology, &problem.policy).is_empty() {
        return None;
    }
    if !check_goal(&graph, &problem.ontology, &problem.policy) {
        return None;
    }
    Some(graph)
}
