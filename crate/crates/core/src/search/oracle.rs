//! Independent exhaustive enumerator used to cross-check the search engine.
//!
//! Deliberately dumb: enumerate every multiset of added-activity templates,
//! every typing of added messages, and every producer/consumer assignment of
//! open pins, then push each candidate through the same finalization
//! predicate the engine uses. Deduplication happens on canonical form, so
//! the result is comparable to `enumerate` as a set.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::constraints::OFFER_ACCEPTANCE_TAG;
use crate::model::{ActivityKind, InstanceGraph, ObjectId};
use crate::ontology::TypeId;

use super::canon::{canonical_key, canonicalize};
use super::finalize::{finalize_candidate, relevant_types};
use super::{Problem, SearchStats, Solution};

/// Hard cap on enumerated wiring assignments.
const WORK_LIMIT: u64 = 5_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle space too large: about {estimated} assignments exceeds {limit}")]
    BoundsTooLarge { estimated: u64, limit: u64 },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Template {
    Final,
    Fork,
    Join,
    Signal,
    OfferAcceptance,
    Trans(usize),
}

impl Template {
    fn can_produce(&self) -> bool {
        !matches!(self, Template::Final)
    }
    fn can_consume(&self) -> bool {
        !matches!(self, Template::Signal)
    }
}

fn template_list(problem: &Problem) -> Vec<Template> {
    let mut ts = vec![
        Template::Final,
        Template::Fork,
        Template::Join,
        Template::Signal,
        Template::OfferAcceptance,
    ];
    for i in 0..problem.catalog.len() {
        ts.push(Template::Trans(i));
    }
    ts
}

/// Multisets (as non-decreasing index sequences) of size 0..=max.
fn multisets_upto(n_options: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    fn step(n: usize, start: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == max {
            return;
        }
        for i in start..n {
            cur.push(i);
            out.push(cur.clone());
            step(n, i, cur, max, out);
            cur.pop();
        }
    }
    let mut cur = Vec::new();
    step(n_options, 0, &mut cur, max, &mut out);
    out
}

struct Shape {
    templates: Vec<Template>,
    open_producers: usize,
    open_consumers: usize,
}

impl Shape {
    /// Number of wiring assignments for one (activities, message-count) cell.
    fn wiring_count(&self, acts: &[usize], n_msgs: usize) -> u64 {
        let p_cnt = acts
            .iter()
            .filter(|&&i| self.templates[i].can_produce())
            .count() as u64;
        let c_cnt = acts
            .iter()
            .filter(|&&i| self.templates[i].can_consume())
            .count() as u64;
        let mut total: u64 = 1;
        for _ in 0..self.open_producers {
            total = total.saturating_mul(1 + p_cnt);
        }
        for _ in 0..self.open_consumers + n_msgs {
            total = total.saturating_mul(1 + c_cnt);
        }
        for _ in 0..n_msgs {
            total = total.saturating_mul(p_cnt.max(1));
        }
        total
    }
}

/// All solutions within bounds by exhaustive enumeration, canonicalized and
/// deduplicated. Ignores `solution_limit`.
pub fn brute_force_oracle(problem: &Problem) -> Result<Vec<Solution>, OracleError> {
    let templates = template_list(problem);
    let mut type_options: Vec<Option<TypeId>> = vec![None];
    for t in relevant_types(problem) {
        type_options.push(Some(t));
    }
    let shape = Shape {
        templates: templates.clone(),
        open_producers: problem
            .fragments
            .messages
            .iter()
            .filter(|m| m.producer.is_none())
            .count(),
        open_consumers: problem
            .fragments
            .messages
            .iter()
            .filter(|m| m.consumer.is_none())
            .count(),
    };

    let act_sets = multisets_upto(templates.len(), problem.bounds.max_added_activities as usize);
    let msg_sets = multisets_upto(
        type_options.len(),
        problem.bounds.max_added_messages as usize,
    );

    let mut estimated: u64 = 0;
    for acts in &act_sets {
        for msgs in &msg_sets {
            estimated = estimated.saturating_add(shape.wiring_count(acts, msgs.len()));
        }
    }
    if estimated > WORK_LIMIT {
        return Err(OracleError::BoundsTooLarge {
            estimated,
            limit: WORK_LIMIT,
        });
    }

    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut solutions: Vec<Solution> = Vec::new();
    for acts in &act_sets {
        for msgs in &msg_sets {
            enumerate_cell(problem, &templates, &type_options, acts, msgs, |graph, aa, am| {
                if let Some(mut resolved) = finalize_candidate(problem, graph, aa, am) {
                    let mut aa = aa.clone();
                    let mut am = am.clone();
                    canonicalize(&mut resolved, &mut aa, &mut am);
                    let key = canonical_key(&resolved);
                    if seen.insert(key) {
                        let stats = SearchStats {
                            added_activities: aa.len() as u32,
                            added_messages: am.len() as u32,
                            ..SearchStats::default()
                        };
                        solutions.push(Solution {
                            graph: resolved,
                            added_activities: aa,
                            added_messages: am,
                            stats,
                        });
                    }
                }
            });
        }
    }
    Ok(solutions)
}

/// Enumerates every wiring of one template/typing cell, invoking `sink` on
/// each grammar-conformant candidate.
fn enumerate_cell<F>(
    problem: &Problem,
    templates: &[Template],
    type_options: &[Option<TypeId>],
    acts: &[usize],
    msgs: &[usize],
    mut sink: F,
) where
    F: FnMut(&InstanceGraph, &BTreeSet<ObjectId>, &BTreeSet<ObjectId>),
{
    let comp = match problem.fragments.composition_workflow() {
        Some(w) => w.id,
        None => return,
    };
    let mut base = problem.fragments.clone();
    let mut added_acts: BTreeSet<ObjectId> = BTreeSet::new();
    let mut act_templates: BTreeMap<ObjectId, Template> = BTreeMap::new();
    for &ti in acts {
        let t = templates[ti];
        let (kind, tag) = match t {
            Template::Final => (ActivityKind::FinalNode, None),
            Template::Fork => (ActivityKind::Fork, None),
            Template::Join => (ActivityKind::Join, None),
            Template::Signal => (ActivityKind::ExternalSignal, None),
            Template::OfferAcceptance => (ActivityKind::Action, Some(OFFER_ACCEPTANCE_TAG)),
            Template::Trans(i) => (
                ActivityKind::Transformation,
                Some(problem.catalog[i].name.as_str()),
            ),
        };
        let id = base.add_activity(kind, comp, false, tag).unwrap();
        added_acts.insert(id);
        act_templates.insert(id, t);
    }
    let mut added_msgs: BTreeSet<ObjectId> = BTreeSet::new();
    for &ti in msgs {
        let id = base
            .add_message(
                &problem.ontology,
                type_options[ti].as_deref(),
                false,
                BTreeMap::new(),
            )
            .unwrap();
        added_msgs.insert(id);
    }

    // Open wiring slots: any message without a producer / consumer. Added
    // messages must be wired to added activities on both ends; existing open
    // pins may stay open or attach to an added activity.
    struct Slot {
        msg: ObjectId,
        producer_side: bool,
        options: Vec<Option<ObjectId>>,
    }
    let producers: Vec<ObjectId> = added_acts
        .iter()
        .copied()
        .filter(|a| act_templates[a].can_produce())
        .collect();
    let consumers: Vec<ObjectId> = added_acts
        .iter()
        .copied()
        .filter(|a| act_templates[a].can_consume())
        .collect();
    let mut slots: Vec<Slot> = Vec::new();
    for m in &base.messages {
        let added = added_msgs.contains(&m.id);
        if m.producer.is_none() {
            let mut options: Vec<Option<ObjectId>> = Vec::new();
            if !added {
                options.push(None);
            }
            options.extend(producers.iter().map(|p| Some(*p)));
            slots.push(Slot {
                msg: m.id,
                producer_side: true,
                options,
            });
        }
        if m.consumer.is_none() {
            let mut options: Vec<Option<ObjectId>> = Vec::new();
            if !added {
                options.push(None);
            }
            options.extend(consumers.iter().map(|c| Some(*c)));
            slots.push(Slot {
                msg: m.id,
                producer_side: false,
                options,
            });
        }
    }
    if slots.iter().any(|s| s.options.is_empty()) {
        return;
    }

    // Odometer over all slot assignments.
    let mut idx = vec![0usize; slots.len()];
    loop {
        let mut graph = base.clone();
        for (slot, &i) in slots.iter().zip(&idx) {
            if let Some(act) = slot.options[i] {
                if slot.producer_side {
                    graph.connect_output(act, slot.msg).unwrap();
                } else {
                    graph.connect_input(act, slot.msg).unwrap();
                }
            }
        }
        if grammar_ok(problem, &graph, &act_templates) {
            sink(&graph, &added_acts, &added_msgs);
        }
        // advance odometer
        let mut k = 0;
        loop {
            if k == idx.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < slots[k].options.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if idx.is_empty() {
            return;
        }
    }
}

/// Template shape rules that are part of the extension grammar rather than
/// of the published constraint set.
fn grammar_ok(
    problem: &Problem,
    graph: &InstanceGraph,
    act_templates: &BTreeMap<ObjectId, Template>,
) -> bool {
    for (&id, t) in act_templates {
        let ins: Vec<_> = graph.messages.iter().filter(|m| m.consumer == Some(id)).collect();
        let outs: Vec<_> = graph.messages.iter().filter(|m| m.producer == Some(id)).collect();
        match t {
            Template::Final => {}
            Template::Fork => {}
            Template::Signal => {
                if outs.len() != 1 {
                    return false;
                }
            }
            Template::Join => {
                if outs.len() != 1 || outs[0].data_type.is_some() {
                    return false;
                }
            }
            Template::OfferAcceptance => {
                if ins.len() != 2 || outs.len() != 1 {
                    return false;
                }
            }
            Template::Trans(i) => {
                let sig = &problem.catalog[*i];
                if outs.len() != 1 || outs[0].data_type.as_ref() != Some(&sig.output_type) {
                    return false;
                }
                if ins.len() != sig.input_types.len() {
                    return false;
                }
                if !inputs_match(problem, &ins, &sig.input_types) {
                    return false;
                }
            }
        }
    }
    true
}

/// Perfect matching between transformation inputs and signature slots under
/// subtyping. Input arities are tiny, so plain backtracking suffices.
fn inputs_match(
    problem: &Problem,
    ins: &[&crate::model::Message],
    slots: &[TypeId],
) -> bool {
    fn step(
        problem: &Problem,
        ins: &[&crate::model::Message],
        slots: &[TypeId],
        used: &mut Vec<bool>,
        k: usize,
    ) -> bool {
        if k == ins.len() {
            return true;
        }
        let ty = match &ins[k].data_type {
            Some(t) => t,
            None => return false,
        };
        for (s, slot) in slots.iter().enumerate() {
            if used[s] {
                continue;
            }
            if problem.ontology.is_subtype(ty, slot).unwrap_or(false) {
                used[s] = true;
                if step(problem, ins, slots, used, k + 1) {
                    return true;
                }
                used[s] = false;
            }
        }
        false
    }
    let mut used = vec![false; slots.len()];
    step(problem, ins, slots, &mut used, 0)
}
