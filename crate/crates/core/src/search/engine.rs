//! Requirement-driven depth-first search.
//!
//! The search keeps a queue of requirements: one goal seed per goal type,
//! then activation demands that cascade backwards from consumed messages to
//! the inputs their producers need. A message without a producer is the
//! branch point: every grammar generator that could produce it (fork,
//! transformation, external signal, offer acceptance, join) yields a child
//! state. Complete states are finalized, canonicalized and deduplicated.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::Instant;

use crate::constraints::OFFER_ACCEPTANCE_TAG;
use crate::model::{ActivityKind, InstanceGraph, ObjectId};
use crate::ontology::TypeId;

use super::canon::{canonical_key, canonicalize};
use super::finalize::{finalize_candidate, relevant_types};
use super::{Problem, SearchStats, Solution};

#[derive(Clone)]
enum Req {
    Goal(TypeId),
    Activate(ObjectId),
}

#[derive(Clone)]
struct State {
    graph: InstanceGraph,
    added_acts: BTreeSet<ObjectId>,
    added_msgs: BTreeSet<ObjectId>,
    secured: BTreeSet<ObjectId>,
    pending: VecDeque<Req>,
}

impl State {
    fn add_act(&mut self, kind: ActivityKind, comp: ObjectId, tag: Option<&str>) -> ObjectId {
        let id = self
            .graph
            .add_activity(kind, comp, false, tag)
            .expect("composition workflow exists");
        self.added_acts.insert(id);
        id
    }

    fn add_msg(&mut self, problem: &Problem, ty: Option<&str>) -> ObjectId {
        let id = self
            .graph
            .add_message(&problem.ontology, ty, false, BTreeMap::new())
            .expect("fresh message types come from the ontology");
        self.added_msgs.insert(id);
        id
    }

    fn acts_left(&self, problem: &Problem) -> usize {
        (problem.bounds.max_added_activities as usize).saturating_sub(self.added_acts.len())
    }

    fn msgs_left(&self, problem: &Problem) -> usize {
        (problem.bounds.max_added_messages as usize).saturating_sub(self.added_msgs.len())
    }

    /// Open-consumer messages in serial order (reusable as inputs).
    fn unconsumed(&self) -> Vec<ObjectId> {
        self.graph
            .messages
            .iter()
            .filter(|m| m.consumer.is_none())
            .map(|m| m.id)
            .collect()
    }

    /// Composition-added final nodes in serial order.
    fn added_finals(&self) -> Vec<ObjectId> {
        self.graph
            .activities
            .iter()
            .filter(|a| a.kind == ActivityKind::FinalNode && self.added_acts.contains(&a.id))
            .map(|a| a.id)
            .collect()
    }

    /// Rejects states whose wiring admits no order assignment.
    fn acyclic(&mut self) -> bool {
        self.graph.assign_orders().is_ok()
    }
}

struct Ctx<'a> {
    problem: &'a Problem,
    comp: ObjectId,
    fresh_types: Vec<TypeId>,
    limit: usize,
    solutions: Vec<Solution>,
    seen: BTreeSet<String>,
    nodes: u64,
    backtracks: u64,
    started: Instant,
}

impl<'a> Ctx<'a> {
    fn done(&self) -> bool {
        self.solutions.len() >= self.limit
    }

    fn subtype(&self, sub: &str, sup: &str) -> bool {
        self.problem.ontology.is_subtype(sub, sup).unwrap_or(false)
    }
}

pub fn search(problem: &Problem, limit: usize) -> Vec<Solution> {
    let comp = match problem.fragments.composition_workflow() {
        Some(w) => w.id,
        None => return Vec::new(),
    };
    if limit == 0 {
        return Vec::new();
    }
    let mut pending = VecDeque::new();
    for g in &problem.policy.goal_types {
        pending.push_back(Req::Goal(g.clone()));
    }
    if problem.policy.robust {
        for m in &problem.fragments.messages {
            pending.push_back(Req::Activate(m.id));
        }
    }
    let state = State {
        graph: problem.fragments.clone(),
        added_acts: BTreeSet::new(),
        added_msgs: BTreeSet::new(),
        secured: BTreeSet::new(),
        pending,
    };
    let mut ctx = Ctx {
        problem,
        comp,
        fresh_types: relevant_types(problem),
        limit,
        solutions: Vec::new(),
        seen: BTreeSet::new(),
        nodes: 0,
        backtracks: 0,
        started: Instant::now(),
    };
    dfs(&mut ctx, state);
    ctx.solutions
}

fn dfs(ctx: &mut Ctx<'_>, mut state: State) {
    if ctx.done() {
        return;
    }
    ctx.nodes += 1;
    let req = match state.pending.pop_front() {
        Some(r) => r,
        None => return complete(ctx, state),
    };
    match req {
        Req::Goal(g) => branch_goal(ctx, state, &g),
        Req::Activate(m) => {
            if state.secured.contains(&m) {
                return dfs(ctx, state);
            }
            let producer = state.graph.message(m).and_then(|msg| msg.producer);
            match producer {
                Some(p) => cascade(ctx, state, m, p),
                None => branch_producer(ctx, state, m),
            }
        }
    }
}

/// A complete requirement queue: in robust mode first close any remaining
/// open consumer pins against final nodes, then validate the candidate.
fn complete(ctx: &mut Ctx<'_>, state: State) {
    if ctx.problem.policy.robust {
        if let Some(open) = state.unconsumed().first().copied() {
            let mut any = false;
            for f in state.added_finals() {
                let mut child = state.clone();
                child.graph.connect_input(f, open).unwrap();
                if child.acyclic() {
                    any = true;
                    dfs(ctx, child);
                    if ctx.done() {
                        return;
                    }
                }
            }
            if state.acts_left(ctx.problem) >= 1 {
                let mut child = state.clone();
                let f = child.add_act(ActivityKind::FinalNode, ctx.comp, None);
                child.graph.connect_input(f, open).unwrap();
                if child.acyclic() {
                    any = true;
                    dfs(ctx, child);
                }
            }
            if !any {
                ctx.backtracks += 1;
            }
            return;
        }
    }
    match finalize_candidate(
        ctx.problem,
        &state.graph,
        &state.added_acts,
        &state.added_msgs,
    ) {
        Some(mut resolved) => {
            let mut acts = state.added_acts.clone();
            let mut msgs = state.added_msgs.clone();
            canonicalize(&mut resolved, &mut acts, &mut msgs);
            let key = canonical_key(&resolved);
            if ctx.seen.insert(key) {
                let stats = SearchStats {
                    nodes_explored: ctx.nodes,
                    backtracks: ctx.backtracks,
                    added_activities: acts.len() as u32,
                    added_messages: msgs.len() as u32,
                    elapsed_ms: ctx.started.elapsed().as_millis() as u64,
                };
                ctx.solutions.push(Solution {
                    graph: resolved,
                    added_activities: acts,
                    added_messages: msgs,
                    stats,
                });
            }
        }
        None => ctx.backtracks += 1,
    }
}

/// Route a goal type to a final node: already covered, reuse an open message,
/// or mint a fresh one; the sink is a new or existing added final node.
fn branch_goal(ctx: &mut Ctx<'_>, state: State, goal: &str) {
    let mut children: Vec<State> = Vec::new();

    let covered = state.graph.messages.iter().any(|m| {
        let final_in = m
            .consumer
            .map(|c| {
                state.added_acts.contains(&c)
                    && state.graph.activity(c).map(|a| a.kind) == Some(ActivityKind::FinalNode)
            })
            .unwrap_or(false);
        final_in
            && m.data_type
                .as_ref()
                .map(|t| ctx.subtype(t, goal))
                .unwrap_or(false)
    });
    if covered {
        children.push(state.clone());
    }

    enum Src {
        Reuse(ObjectId),
        Fresh(TypeId),
    }
    let mut sources: Vec<Src> = Vec::new();
    for m in &state.graph.messages {
        let fits = m.consumer.is_none()
            && m.data_type
                .as_ref()
                .map(|t| ctx.subtype(t, goal))
                .unwrap_or(false);
        if fits {
            sources.push(Src::Reuse(m.id));
        }
    }
    for t in &ctx.fresh_types {
        if ctx.subtype(t, goal) {
            sources.push(Src::Fresh(t.clone()));
        }
    }

    for src in &sources {
        if matches!(src, Src::Fresh(_)) && state.msgs_left(ctx.problem) < 1 {
            continue;
        }
        // sink: each existing added final, then a new one
        let mut sinks: Vec<Option<ObjectId>> = state.added_finals().into_iter().map(Some).collect();
        if state.acts_left(ctx.problem) >= 1 {
            sinks.push(None);
        }
        for sink in sinks {
            let mut child = state.clone();
            let msg = match src {
                Src::Reuse(id) => *id,
                Src::Fresh(t) => child.add_msg(ctx.problem, Some(t)),
            };
            let f = match sink {
                Some(f) => f,
                None => child.add_act(ActivityKind::FinalNode, ctx.comp, None),
            };
            child.graph.connect_input(f, msg).unwrap();
            if !child.acyclic() {
                continue;
            }
            child.pending.push_front(Req::Activate(msg));
            children.push(child);
        }
    }

    recurse_children(ctx, children);
}

/// The message already has a producer: secure it and demand the producer's
/// own inputs (all of them, except a merge which needs exactly one).
fn cascade(ctx: &mut Ctx<'_>, mut state: State, m: ObjectId, p: ObjectId) {
    state.secured.insert(m);
    let kind = state.graph.activity(p).map(|a| a.kind);
    let inputs: Vec<ObjectId> = state
        .graph
        .messages
        .iter()
        .filter(|i| i.consumer == Some(p))
        .map(|i| i.id)
        .collect();
    match kind {
        Some(ActivityKind::InitialNode) | Some(ActivityKind::ExternalSignal) | None => {
            dfs(ctx, state)
        }
        Some(ActivityKind::Merge) => {
            let mut children = Vec::new();
            for i in inputs {
                let mut child = state.clone();
                child.pending.push_front(Req::Activate(i));
                children.push(child);
            }
            recurse_children(ctx, children);
        }
        Some(_) => {
            for i in inputs {
                state.pending.push_back(Req::Activate(i));
            }
            dfs(ctx, state)
        }
    }
}

/// Per-input source when wiring a multi-input generator.
#[derive(Clone)]
enum Pick {
    Reuse(ObjectId),
    Fresh(Option<TypeId>),
}

fn wire_input(child: &mut State, problem: &Problem, act: ObjectId, pick: &Pick) -> Option<ObjectId> {
    match pick {
        Pick::Reuse(id) => {
            if child.graph.message(*id).map(|m| m.consumer.is_some()).unwrap_or(true) {
                return None;
            }
            child.graph.connect_input(act, *id).ok()?;
            Some(*id)
        }
        Pick::Fresh(t) => {
            if child.msgs_left(problem) < 1 {
                return None;
            }
            let id = child.add_msg(problem, t.as_deref());
            child.graph.connect_input(act, id).unwrap();
            Some(id)
        }
    }
}

/// The message has no producer: branch over every generator that can supply
/// one, then re-demand the message so activation cascades over new inputs.
fn branch_producer(ctx: &mut Ctx<'_>, state: State, m: ObjectId) {
    let msg = state.graph.message(m).expect("activation target exists").clone();
    let mty = msg.data_type.clone();
    let mut children: Vec<State> = Vec::new();

    // External signal: one output carrying a user-providable type.
    if let Some(t) = &mty {
        if ctx.problem.policy.user_input_types.contains(t) && state.acts_left(ctx.problem) >= 1 {
            let mut child = state.clone();
            let es = child.add_act(ActivityKind::ExternalSignal, ctx.comp, None);
            child.graph.connect_output(es, m).unwrap();
            if child.acyclic() {
                child.pending.push_front(Req::Activate(m));
                children.push(child);
            }
        }
    }

    // Extend an existing added fork whose pins carry the identical type.
    for f in state.added_forks() {
        let fork_input = state.graph.messages.iter().find(|i| i.consumer == Some(f));
        let pins_match = match fork_input {
            Some(i) => i.data_type == mty,
            None => false,
        };
        if !pins_match {
            continue;
        }
        let mut child = state.clone();
        child.graph.connect_output(f, m).unwrap();
        if child.acyclic() {
            child.pending.push_front(Req::Activate(m));
            children.push(child);
        }
    }

    // New fork duplicating an open-consumer message of the identical type.
    if state.acts_left(ctx.problem) >= 1 {
        for src in state.unconsumed() {
            if src == m {
                continue;
            }
            if state.graph.message(src).unwrap().data_type != mty {
                continue;
            }
            let mut child = state.clone();
            let f = child.add_act(ActivityKind::Fork, ctx.comp, None);
            child.graph.connect_input(f, src).unwrap();
            child.graph.connect_output(f, m).unwrap();
            if child.acyclic() {
                child.pending.push_front(Req::Activate(m));
                children.push(child);
            }
        }
        // New fork over a fresh source message of the identical type.
        if state.msgs_left(ctx.problem) >= 1 {
            let mut child = state.clone();
            let f = child.add_act(ActivityKind::Fork, ctx.comp, None);
            let src = child.add_msg(ctx.problem, mty.as_deref());
            child.graph.connect_input(f, src).unwrap();
            child.graph.connect_output(f, m).unwrap();
            if child.acyclic() {
                child.pending.push_front(Req::Activate(m));
                children.push(child);
            }
        }
    }

    // Catalog transformation with the exact output type.
    if let Some(t) = &mty {
        if state.acts_left(ctx.problem) >= 1 {
            for sig in &ctx.problem.catalog {
                if &sig.output_type != t {
                    continue;
                }
                let mut option_rows: Vec<Vec<Pick>> = Vec::new();
                for it in &sig.input_types {
                    let mut row = Vec::new();
                    for src in state.unconsumed() {
                        let sm = state.graph.message(src).unwrap();
                        let ok = sm
                            .data_type
                            .as_ref()
                            .map(|st| ctx.subtype(st, it))
                            .unwrap_or(false);
                        if ok && src != m {
                            row.push(Pick::Reuse(src));
                        }
                    }
                    for ct in &ctx.fresh_types {
                        if ctx.subtype(ct, it) {
                            row.push(Pick::Fresh(Some(ct.clone())));
                        }
                    }
                    option_rows.push(row);
                }
                for combo in cartesian(&option_rows) {
                    let mut child = state.clone();
                    let tr = child.add_act(ActivityKind::Transformation, ctx.comp, Some(&sig.name));
                    child.graph.connect_output(tr, m).unwrap();
                    let mut ok = true;
                    for pick in &combo {
                        if wire_input(&mut child, ctx.problem, tr, pick).is_none() {
                            ok = false;
                            break;
                        }
                    }
                    if ok && child.acyclic() {
                        child.pending.push_front(Req::Activate(m));
                        children.push(child);
                    }
                }
            }
        }
    }

    // Offer acceptance: offer + acknowledgement in, answer out, offer
    // producer and answer consumer sharing a non-composition owner.
    if let Some(t) = &mty {
        let ont = &ctx.problem.ontology;
        let predefined_present = ["Offer", "UserAcknowledgement", "OfferAnswer"]
            .iter()
            .all(|r| ont.contains(r));
        if predefined_present
            && ctx.subtype(t, "OfferAnswer")
            && state.acts_left(ctx.problem) >= 1
        {
            let consumer_owner = msg
                .consumer
                .and_then(|c| state.graph.activity(c))
                .map(|a| a.owner)
                .filter(|o| *o != ctx.comp);
            if let Some(owner) = consumer_owner {
                let mut offers = Vec::new();
                for src in state.unconsumed() {
                    let sm = state.graph.message(src).unwrap();
                    let is_offer = sm
                        .data_type
                        .as_ref()
                        .map(|st| ctx.subtype(st, "Offer"))
                        .unwrap_or(false);
                    let owner_ok = sm
                        .producer
                        .and_then(|p| state.graph.activity(p))
                        .map(|a| a.owner == owner)
                        .unwrap_or(false);
                    if is_offer && owner_ok && src != m {
                        offers.push(src);
                    }
                }
                let mut acks: Vec<Pick> = Vec::new();
                for src in state.unconsumed() {
                    let sm = state.graph.message(src).unwrap();
                    let ok = sm
                        .data_type
                        .as_ref()
                        .map(|st| ctx.subtype(st, "UserAcknowledgement"))
                        .unwrap_or(false);
                    if ok && src != m {
                        acks.push(Pick::Reuse(src));
                    }
                }
                for ct in &ctx.fresh_types {
                    if ctx.subtype(ct, "UserAcknowledgement") {
                        acks.push(Pick::Fresh(Some(ct.clone())));
                    }
                }
                for offer in &offers {
                    for ack in &acks {
                        if let Pick::Reuse(a) = ack {
                            if a == offer {
                                continue;
                            }
                        }
                        let mut child = state.clone();
                        let oa = child.add_act(
                            ActivityKind::Action,
                            ctx.comp,
                            Some(OFFER_ACCEPTANCE_TAG),
                        );
                        child.graph.connect_output(oa, m).unwrap();
                        child.graph.connect_input(oa, *offer).unwrap();
                        if wire_input(&mut child, ctx.problem, oa, ack).is_none() {
                            continue;
                        }
                        if child.acyclic() {
                            child.pending.push_front(Req::Activate(m));
                            children.push(child);
                        }
                    }
                }
            }
        }
    }

    // Join: untyped synchronization point over two or more inputs.
    if mty.is_none() && state.acts_left(ctx.problem) >= 1 {
        let mut options: Vec<Pick> = Vec::new();
        for src in state.unconsumed() {
            if src != m {
                options.push(Pick::Reuse(src));
            }
        }
        options.push(Pick::Fresh(None));
        for ct in &ctx.fresh_types {
            options.push(Pick::Fresh(Some(ct.clone())));
        }
        let reusable = state.unconsumed().len();
        let k_max = reusable + state.msgs_left(ctx.problem);
        for combo in multisets(&options, k_max) {
            let fresh_needed = combo
                .iter()
                .filter(|p| matches!(p, Pick::Fresh(_)))
                .count();
            if fresh_needed > state.msgs_left(ctx.problem) {
                continue;
            }
            let mut child = state.clone();
            let j = child.add_act(ActivityKind::Join, ctx.comp, None);
            child.graph.connect_output(j, m).unwrap();
            let mut ok = true;
            for pick in &combo {
                if wire_input(&mut child, ctx.problem, j, pick).is_none() {
                    ok = false;
                    break;
                }
            }
            if ok && child.acyclic() {
                child.pending.push_front(Req::Activate(m));
                children.push(child);
            }
        }
    }

    recurse_children(ctx, children);
}

impl State {
    /// Added fork activities in serial order.
    fn added_forks(&self) -> Vec<ObjectId> {
        self.graph
            .activities
            .iter()
            .filter(|a| a.kind == ActivityKind::Fork && self.added_acts.contains(&a.id))
            .map(|a| a.id)
            .collect()
    }
}

fn recurse_children(ctx: &mut Ctx<'_>, children: Vec<State>) {
    if children.is_empty() {
        ctx.backtracks += 1;
        return;
    }
    for child in children {
        if ctx.done() {
            return;
        }
        dfs(ctx, child);
    }
}

/// All index combinations, one pick per row.
fn cartesian(rows: &[Vec<Pick>]) -> Vec<Vec<Pick>> {
    let mut out: Vec<Vec<Pick>> = vec![Vec::new()];
    for row in rows {
        let mut next = Vec::new();
        for prefix in &out {
            for pick in row {
                let mut v = prefix.clone();
                v.push(pick.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Multisets of size 2..=k_max over the option list: non-decreasing index
/// sequences, where reuse entries may appear at most once.
fn multisets(options: &[Pick], k_max: usize) -> Vec<Vec<Pick>> {
    let mut out = Vec::new();
    fn step(
        options: &[Pick],
        start: usize,
        current: &mut Vec<usize>,
        k_max: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() >= 2 {
            out.push(current.clone());
        }
        if current.len() == k_max {
            return;
        }
        for i in start..options.len() {
            let repeat_of_reuse =
                matches!(options[i], Pick::Reuse(_)) && current.last() == Some(&i);
            if repeat_of_reuse {
                continue;
            }
            current.push(i);
            step(options, i, current, k_max, out);
            current.pop();
        }
    }
    let mut indices = Vec::new();
    let mut current = Vec::new();
    step(options, 0, &mut current, k_max, &mut indices);
    for idx in indices {
        out.push(idx.iter().map(|&i| options[i].clone()).collect());
    }
    out
}
