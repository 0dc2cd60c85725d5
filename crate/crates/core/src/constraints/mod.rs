//! Well-formedness rules over an [`InstanceGraph`], plus goal satisfaction.
//!
//! Every rule lives behind the [`ConstraintRule`] trait and is registered in
//! [`registry`] under its [`ConstraintId`]; `check_all` runs the whole
//! registry in fixed id order so output is deterministic.

mod rules;

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{ActivityKind, InstanceGraph, ObjectId};
use crate::ontology::{Ontology, TypeId};

pub use rules::{registry, OFFER_ACCEPTANCE_TAG};

/// Closed rule identifier set. `C*` and `G1` map to published constraint
/// statements; `S*`/`D*` are structural and design-decision rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintId {
    S1,
    S2,
    S3,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
    C12,
    D1,
    D2,
    G1,
}

impl ConstraintId {
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintId::S1 => "S1",
            ConstraintId::S2 => "S2",
            ConstraintId::S3 => "S3",
            ConstraintId::C1 => "C1",
            ConstraintId::C2 => "C2",
            ConstraintId::C3 => "C3",
            ConstraintId::C4 => "C4",
            ConstraintId::C5 => "C5",
            ConstraintId::C6 => "C6",
            ConstraintId::C7 => "C7",
            ConstraintId::C8 => "C8",
            ConstraintId::C9 => "C9",
            ConstraintId::C10 => "C10",
            ConstraintId::C11 => "C11",
            ConstraintId::C12 => "C12",
            ConstraintId::D1 => "D1",
            ConstraintId::D2 => "D2",
            ConstraintId::G1 => "G1",
        }
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One failed constraint instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub constraint: ConstraintId,
    pub subjects: Vec<ObjectId>,
    pub detail: String,
}

impl Violation {
    /// Stable one-line rendering: `<ConstraintId> <subject-ids...> : <detail>`.
    pub fn render(&self) -> String {
        let subjects = self
            .subjects
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        format!("{} {} : {}", self.constraint, subjects, self.detail)
    }
}

/// Goal, user-input and policy configuration of a problem.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolicyConfig {
    pub max_price: Option<i64>,
    pub user_input_types: BTreeSet<TypeId>,
    pub goal_types: Vec<TypeId>,
    pub robust: bool,
}

/// Everything a rule may look at. Rules are pure functions of this.
pub struct CheckContext<'a> {
    pub graph: &'a InstanceGraph,
    pub ontology: &'a Ontology,
    pub policy: &'a PolicyConfig,
}

/// One well-formedness rule.
pub trait ConstraintRule {
    fn id(&self) -> ConstraintId;
    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation>;
}

fn run_subset(ctx: &CheckContext<'_>, ids: &[ConstraintId]) -> Vec<Violation> {
    let mut out = Vec::new();
    for rule in registry() {
        if ids.contains(&rule.id()) {
            let mut vs = rule.check(ctx);
            vs.sort_by(|a, b| a.subjects.cmp(&b.subjects));
            out.extend(vs);
        }
    }
    out
}

/// Activation rules C1–C5.
pub fn check_activation(graph: &InstanceGraph) -> Vec<Violation> {
    let ont = Ontology::new();
    let policy = PolicyConfig::default();
    let ctx = CheckContext { graph, ontology: &ont, policy: &policy };
    run_subset(
        &ctx,
        &[ConstraintId::C1, ConstraintId::C2, ConstraintId::C3, ConstraintId::C4, ConstraintId::C5],
    )
}

/// Composition boundary rules C6–C7.
pub fn check_boundary(graph: &InstanceGraph) -> Vec<Violation> {
    let ont = Ontology::new();
    let policy = PolicyConfig::default();
    let ctx = CheckContext { graph, ontology: &ont, policy: &policy };
    run_subset(&ctx, &[ConstraintId::C6, ConstraintId::C7])
}

/// Message ordering rule C8.
pub fn check_ordering(graph: &InstanceGraph) -> Vec<Violation> {
    let ont = Ontology::new();
    let policy = PolicyConfig::default();
    let ctx = CheckContext { graph, ontology: &ont, policy: &policy };
    run_subset(&ctx, &[ConstraintId::C8])
}

/// OfferAcceptance signature and owner-match rule C9.
pub fn check_offer_acceptance(graph: &InstanceGraph, ontology: &Ontology) -> Vec<Violation> {
    let policy = PolicyConfig::default();
    let ctx = CheckContext { graph, ontology, policy: &policy };
    run_subset(&ctx, &[ConstraintId::C9])
}

/// Fork type identity rule C10.
pub fn check_fork_typing(graph: &InstanceGraph) -> Vec<Violation> {
    let ont = Ontology::new();
    let policy = PolicyConfig::default();
    let ctx = CheckContext { graph, ontology: &ont, policy: &policy };
    run_subset(&ctx, &[ConstraintId::C10])
}

/// External-signal typing rule C11.
pub fn check_external_signals(graph: &InstanceGraph, policy: &PolicyConfig) -> Vec<Violation> {
    let ont = Ontology::new();
    let ctx = CheckContext { graph, ontology: &ont, policy };
    run_subset(&ctx, &[ConstraintId::C11])
}

/// Price policy rule C12.
pub fn check_policy(graph: &InstanceGraph, ontology: &Ontology, policy: &PolicyConfig) -> Vec<Violation> {
    let ctx = CheckContext { graph, ontology, policy };
    run_subset(&ctx, &[ConstraintId::C12])
}

/// Structural rules S1–S3 and design-decision typing rules D1–D2.
pub fn check_structural(graph: &InstanceGraph, ontology: &Ontology) -> Vec<Violation> {
    let policy = PolicyConfig::default();
    let ctx = CheckContext { graph, ontology, policy: &policy };
    run_subset(
        &ctx,
        &[ConstraintId::S1, ConstraintId::S2, ConstraintId::S3, ConstraintId::D1, ConstraintId::D2],
    )
}

/// Goal satisfaction G1: every goal type labels an active message entering a
/// Composition-owned final node; robust mode additionally demands the whole
/// graph active.
pub fn check_goal(graph: &InstanceGraph, ontology: &Ontology, policy: &PolicyConfig) -> bool {
    let comp = match graph.composition_workflow() {
        Some(w) => Some(w.id),
        None if policy.goal_types.is_empty() => None,
        None => return false,
    };
    for goal in &policy.goal_types {
        let comp = comp.unwrap();
        let mut reached = false;
        for m in &graph.messages {
            if !m.active {
                continue;
            }
            let ty = match &m.data_type {
                Some(t) => t,
                None => continue,
            };
            let consumer = match m.consumer.and_then(|c| graph.activity(c)) {
                Some(a) => a,
                None => continue,
            };
            if consumer.kind == ActivityKind::FinalNode
                && consumer.owner == comp
                && ontology.is_subtype(ty, goal).unwrap_or(false)
            {
                reached = true;
                break;
            }
        }
        if !reached {
            return false;
        }
    }
    if policy.robust {
        if graph.activities.iter().any(|a| !a.active) {
            return false;
        }
        if graph.messages.iter().any(|m| !m.active) {
            return false;
        }
    }
    true
}

/// Concatenation of every rule in fixed id order, plus a G1 violation when
/// the goal is unsatisfied. Pure and byte-stable.
pub fn check_all(graph: &InstanceGraph, ontology: &Ontology, policy: &PolicyConfig) -> Vec<Violation> {
    let ctx = CheckContext { graph, ontology, policy };
    let mut out = Vec::new();
    for rule in registry() {
        let mut vs = rule.check(&ctx);
        vs.sort_by(|a, b| a.subjects.cmp(&b.subjects));
        out.extend(vs);
    }
    if !check_goal(graph, ontology, policy) {
        let subjects = graph
            .composition_workflow()
            .map(|w| vec![w.id])
            .unwrap_or_default();
        out.push(Violation {
            constraint: ConstraintId::G1,
            subjects,
            detail: format!(
                "goal not satisfied: {}",
                policy.goal_types.join(", ")
            ),
        });
    }
    out
}
