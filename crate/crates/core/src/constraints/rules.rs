//! The rule implementations behind the registry.

use crate::model::{ActivityKind, ActivityNode, InstanceGraph, Message, ObjectId};
use crate::ontology::AttrValue;

use super::{CheckContext, ConstraintId, ConstraintRule, Violation};

/// Role tag marking the predefined user-interaction action.
pub const OFFER_ACCEPTANCE_TAG: &str = "OfferAcceptance";

/// All rules in fixed id order (S, C, D). `check_all` appends G1 itself.
pub fn registry() -> Vec<Box<dyn ConstraintRule>> {
    vec![
        Box::new(ReferentialIntegrity),
        Box::new(Arity),
        Box::new(DanglingActiveMessage),
        Box::new(ActiveActionInputs),
        Box::new(JoinOutputActivation),
        Box::new(ForkDecisionOutputActivation),
        Box::new(MergeOutputActivation),
        Box::new(ActiveMergeInput),
        Box::new(BoundaryIntoExternal),
        Box::new(BoundaryOutOfExternal),
        Box::new(MessageOrdering),
        Box::new(OfferAcceptanceSignature),
        Box::new(ForkTypeIdentity),
        Box::new(ExternalSignalTyping),
        Box::new(PricePolicy),
        Box::new(MergeTyping),
        Box::new(DecisionTyping),
    ]
}

fn violation(constraint: ConstraintId, subjects: Vec<ObjectId>, detail: String) -> Violation {
    Violation { constraint, subjects, detail }
}

fn inputs(graph: &InstanceGraph, act: ObjectId) -> Vec<&Message> {
    graph.messages.iter().filter(|m| m.consumer == Some(act)).collect()
}

fn outputs(graph: &InstanceGraph, act: ObjectId) -> Vec<&Message> {
    graph.messages.iter().filter(|m| m.producer == Some(act)).collect()
}

fn producer_kind(graph: &InstanceGraph, m: &Message) -> Option<ActivityKind> {
    m.producer.and_then(|p| graph.activity(p)).map(|a| a.kind)
}

/// S1: referential integrity, type resolution, attribute schema conformance,
/// exactly one composition workflow.
struct ReferentialIntegrity;

impl ConstraintRule for ReferentialIntegrity {
    fn id(&self) -> ConstraintId {
        ConstraintId::S1
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let mut out = Vec::new();
        let comps = g.workflows.iter().filter(|w| w.is_composition).count();
        if comps != 1 && !g.workflows.is_empty() {
            let subjects = g.workflows.iter().map(|w| w.id).collect();
            out.push(violation(
                ConstraintId::S1,
                subjects,
                format!("expected exactly one composition workflow, found {comps}"),
            ));
        }
        for a in &g.activities {
            if g.workflow(a.owner).is_none() {
                out.push(violation(
                    ConstraintId::S1,
                    vec![a.id],
                    format!("owner {} does not resolve", a.owner),
                ));
            }
        }
        for m in &g.messages {
            if let Some(p) = m.producer {
                if g.activity(p).is_none() {
                    out.push(violation(
                        ConstraintId::S1,
                        vec![m.id],
                        format!("producer {p} does not resolve"),
                    ));
                }
            }
            if let Some(c) = m.consumer {
                if g.activity(c).is_none() {
                    out.push(violation(
                        ConstraintId::S1,
                        vec![m.id],
                        format!("consumer {c} does not resolve"),
                    ));
                }
            }
            if let Some(ty) = &m.data_type {
                match ctx.ontology.attributes_of(ty) {
                    Err(_) => out.push(violation(
                        ConstraintId::S1,
                        vec![m.id],
                        format!("data type {ty} does not resolve"),
                    )),
                    Ok(schema) => {
                        if ctx.ontology.is_abstract(ty).unwrap_or(false) {
                            out.push(violation(
                                ConstraintId::S1,
                                vec![m.id],
                                format!("abstract type {ty} cannot type a concrete message"),
                            ));
                        }
                        for (name, value) in &m.attributes {
                            match schema.get(name) {
                                None => out.push(violation(
                                    ConstraintId::S1,
                                    vec![m.id],
                                    format!("attribute {name} not in schema of {ty}"),
                                )),
                                Some(kind) if !value.matches(kind) => out.push(violation(
                                    ConstraintId::S1,
                                    vec![m.id],
                                    format!("attribute {name} has the wrong kind for {ty}"),
                                )),
                                _ => {}
                            }
                        }
                    }
                }
            } else if !m.attributes.is_empty() {
                out.push(violation(
                    ConstraintId::S1,
                    vec![m.id],
                    "attributes on an untyped message".to_string(),
                ));
            }
        }
        out
    }
}

/// S2: kind arity bounds over all activities.
struct Arity;

impl ConstraintRule for Arity {
    fn id(&self) -> ConstraintId {
        ConstraintId::S2
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let mut out = Vec::new();
        for a in &g.activities {
            if let Ok(vs) = g.arity_check(a.id) {
                for v in vs {
                    out.push(violation(ConstraintId::S2, vec![v.activity], v.detail));
                }
            }
        }
        out
    }
}

/// S3: every active message has both a producer and a consumer.
struct DanglingActiveMessage;

impl ConstraintRule for DanglingActiveMessage {
    fn id(&self) -> ConstraintId {
        ConstraintId::S3
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let mut out = Vec::new();
        for m in &ctx.graph.messages {
            if m.active && (m.producer.is_none() || m.consumer.is_none()) {
                out.push(violation(
                    ConstraintId::S3,
                    vec![m.id],
                    "active message is missing a producer or consumer".to_string(),
                ));
            }
        }
        out
    }
}

fn is_c1_kind(kind: ActivityKind) -> bool {
    // The activation rule for "actions" covers actions and transformations;
    // control nodes are governed by C2-C5, external signals have no inputs.
    matches!(kind, ActivityKind::Action | ActivityKind::Transformation)
}

/// C1: an active action has only active inputs.
struct ActiveActionInputs;

impl ConstraintRule for ActiveActionInputs {
    fn id(&self) -> ConstraintId {
        ConstraintId::C1
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let mut out = Vec::new();
        for a in &g.activities {
            if !a.active || !is_c1_kind(a.kind) {
                continue;
            }
            for m in inputs(g, a.id) {
                if !m.active {
                    out.push(violation(
                        ConstraintId::C1,
                        vec![a.id, m.id],
                        format!("active {} has inactive input {}", a.kind.name(), m.id),
                    ));
                }
            }
        }
        out
    }
}

fn all_producer_inputs_active(
    graph: &InstanceGraph,
    id: ConstraintId,
    kinds: &[ActivityKind],
) -> Vec<Violation> {
    let mut out = Vec::new();
    for m in &graph.messages {
        if !m.active {
            continue;
        }
        let p = match m.producer {
            Some(p) => p,
            None => continue,
        };
        let node = match graph.activity(p) {
            Some(n) => n,
            None => continue,
        };
        if !kinds.contains(&node.kind) {
            continue;
        }
        for m2 in inputs(graph, p) {
            if !m2.active {
                out.push(violation(
                    id,
                    vec![m.id, m2.id],
                    format!(
                        "active output {} of {} has inactive input {}",
                        m.id,
                        node.kind.name(),
                        m2.id
                    ),
                ));
            }
        }
    }
    out
}

/// C2: an active join output forces all join inputs active.
struct JoinOutputActivation;

impl ConstraintRule for JoinOutputActivation {
    fn id(&self) -> ConstraintId {
        ConstraintId::C2
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        all_producer_inputs_active(ctx.graph, ConstraintId::C2, &[ActivityKind::Join])
    }
}

/// C3: an active decision/fork output forces the input active.
struct ForkDecisionOutputActivation;

impl ConstraintRule for ForkDecisionOutputActivation {
    fn id(&self) -> ConstraintId {
        ConstraintId::C3
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        all_producer_inputs_active(
            ctx.graph,
            ConstraintId::C3,
            &[ActivityKind::Decision, ActivityKind::Fork],
        )
    }
}

/// C4: an active merge output needs at least one active merge input.
struct MergeOutputActivation;

impl ConstraintRule for MergeOutputActivation {
    fn id(&self) -> ConstraintId {
        ConstraintId::C4
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let mut out = Vec::new();
        for m in &g.messages {
            if !m.active {
                continue;
            }
            if producer_kind(g, m) != Some(ActivityKind::Merge) {
                continue;
            }
            let p = m.producer.unwrap();
            if !inputs(g, p).iter().any(|m2| m2.active) {
                out.push(violation(
                    ConstraintId::C4,
                    vec![m.id],
                    "active merge output with no active merge input".to_string(),
                ));
            }
        }
        out
    }
}

/// C5: an active merge needs at least one active input message.
struct ActiveMergeInput;

impl ConstraintRule for ActiveMergeInput {
    fn id(&self) -> ConstraintId {
        ConstraintId::C5
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let mut out = Vec::new();
        for a in &g.activities {
            if a.kind != ActivityKind::Merge || !a.active {
                continue;
            }
            if !inputs(g, a.id).iter().any(|m| m.active) {
                out.push(violation(
                    ConstraintId::C5,
                    vec![a.id],
                    "active merge with no active input".to_string(),
                ));
            }
        }
        out
    }
}

fn owners_of(graph: &InstanceGraph, m: &Message) -> Option<(ObjectId, ObjectId)> {
    let p = graph.activity(m.producer?)?;
    let c = graph.activity(m.consumer?)?;
    Some((p.owner, c.owner))
}

/// C6: a message entering an external workflow comes out of the composition.
/// Intra-fragment messages (same non-composition owner) are exempt.
struct BoundaryIntoExternal;

impl ConstraintRule for BoundaryIntoExternal {
    fn id(&self) -> ConstraintId {
        ConstraintId::C6
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let comp = match g.composition_workflow() {
            Some(w) => w.id,
            None => return Vec::new(),
        };
        let mut out = Vec::new();
        for m in &g.messages {
            if let Some((po, co)) = owners_of(g, m) {
                if po != co && co != comp && po != comp {
                    out.push(violation(
                        ConstraintId::C6,
                        vec![m.id],
                        "message into an external workflow not produced by the composition"
                            .to_string(),
                    ));
                }
            }
        }
        out
    }
}

/// C7: a message leaving an external workflow goes into the composition.
struct BoundaryOutOfExternal;

impl ConstraintRule for BoundaryOutOfExternal {
    fn id(&self) -> ConstraintId {
        ConstraintId::C7
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let comp = match g.composition_workflow() {
            Some(w) => w.id,
            None => return Vec::new(),
        };
        let mut out = Vec::new();
        for m in &g.messages {
            if let Some((po, co)) = owners_of(g, m) {
                if po != co && po != comp && co != comp {
                    out.push(violation(
                        ConstraintId::C7,
                        vec![m.id],
                        "message out of an external workflow not consumed by the composition"
                            .to_string(),
                    ));
                }
            }
        }
        out
    }
}

/// C8: an activity's input orders lie strictly below its output orders.
struct MessageOrdering;

impl ConstraintRule for MessageOrdering {
    fn id(&self) -> ConstraintId {
        ConstraintId::C8
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let mut out = Vec::new();
        for a in &g.activities {
            for m in inputs(g, a.id) {
                for m2 in outputs(g, a.id) {
                    if m.order >= m2.order {
                        out.push(violation(
                            ConstraintId::C8,
                            vec![a.id, m.id, m2.id],
                            format!(
                                "input order {} is not below output order {}",
                                m.order, m2.order
                            ),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// C9: OfferAcceptance-tagged actions consume one offer and one user
/// acknowledgement, produce one offer answer, and the offer's producer
/// workflow equals the answer's consumer workflow (not the composition).
struct OfferAcceptanceSignature;

impl OfferAcceptanceSignature {
    fn check_one(&self, ctx: &CheckContext<'_>, a: &ActivityNode) -> Option<Violation> {
        let g = ctx.graph;
        let ont = ctx.ontology;
        let sub = |ty: &Option<String>, sup: &str| -> bool {
            match ty {
                Some(t) => ont.is_subtype(t, sup).unwrap_or(false),
                None => false,
            }
        };
        let ins = inputs(g, a.id);
        let offers: Vec<&&Message> = ins.iter().filter(|m| sub(&m.data_type, "Offer")).collect();
        let acks: Vec<&&Message> = ins
            .iter()
            .filter(|m| sub(&m.data_type, "UserAcknowledgement"))
            .collect();
        let outs = outputs(g, a.id);
        let answers: Vec<&&Message> =
            outs.iter().filter(|m| sub(&m.data_type, "OfferAnswer")).collect();
        if offers.len() != 1 || acks.len() != 1 || answers.len() != 1 {
            return Some(violation(
                ConstraintId::C9,
                vec![a.id],
                format!(
                    "OfferAcceptance signature incomplete: {} offer(s), {} acknowledgement(s), {} answer(s)",
                    offers.len(),
                    acks.len(),
                    answers.len()
                ),
            ));
        }
        let offer = offers[0];
        let answer = answers[0];
        let comp = g.composition_workflow().map(|w| w.id);
        let offer_owner = offer.producer.and_then(|p| g.activity(p)).map(|n| n.owner);
        let answer_owner = answer.consumer.and_then(|c| g.activity(c)).map(|n| n.owner);
        match (offer_owner, answer_owner) {
            (Some(po), Some(co)) if po == co && Some(po) != comp => None,
            _ => Some(violation(
                ConstraintId::C9,
                vec![a.id, offer.id, answer.id],
                "offer producer and answer consumer must share a non-composition owner"
                    .to_string(),
            )),
        }
    }
}

impl ConstraintRule for OfferAcceptanceSignature {
    fn id(&self) -> ConstraintId {
        ConstraintId::C9
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        ctx.graph
            .activities
            .iter()
            .filter(|a| a.role_tag.as_deref() == Some(OFFER_ACCEPTANCE_TAG))
            .filter_map(|a| self.check_one(ctx, a))
            .collect()
    }
}

/// C10: fork inputs and outputs carry the identical data type.
struct ForkTypeIdentity;

impl ConstraintRule for ForkTypeIdentity {
    fn id(&self) -> ConstraintId {
        ConstraintId::C10
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let mut out = Vec::new();
        for a in &g.activities {
            if a.kind != ActivityKind::Fork {
                continue;
            }
            let mut types: Vec<&Option<String>> = Vec::new();
            for m in inputs(g, a.id) {
                types.push(&m.data_type);
            }
            for m in outputs(g, a.id) {
                types.push(&m.data_type);
            }
            if types.windows(2).any(|w| w[0] != w[1]) {
                out.push(violation(
                    ConstraintId::C10,
                    vec![a.id],
                    "fork pins do not all carry the identical type".to_string(),
                ));
            }
        }
        out
    }
}

/// C11: external-signal outputs carry a user-providable type (exact
/// membership, not closed under subtyping).
struct ExternalSignalTyping;

impl ConstraintRule for ExternalSignalTyping {
    fn id(&self) -> ConstraintId {
        ConstraintId::C11
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let mut out = Vec::new();
        for a in &g.activities {
            if a.kind != ActivityKind::ExternalSignal {
                continue;
            }
            for m in outputs(g, a.id) {
                let ok = m
                    .data_type
                    .as_ref()
                    .map(|t| ctx.policy.user_input_types.contains(t))
                    .unwrap_or(false);
                if !ok {
                    out.push(violation(
                        ConstraintId::C11,
                        vec![a.id, m.id],
                        format!(
                            "external signal output type {} is not user-providable",
                            m.data_type.as_deref().unwrap_or("<untyped>")
                        ),
                    ));
                }
            }
        }
        out
    }
}

/// C12: offers respect the price ceiling, when one is set. Messages whose
/// price attribute is still unset are skipped (decided later by search).
struct PricePolicy;

impl ConstraintRule for PricePolicy {
    fn id(&self) -> ConstraintId {
        ConstraintId::C12
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let max = match ctx.policy.max_price {
            Some(v) => v,
            None => return Vec::new(),
        };
        let mut out = Vec::new();
        for m in &ctx.graph.messages {
            let ty = match &m.data_type {
                Some(t) => t,
                None => continue,
            };
            if !ctx.ontology.is_subtype(ty, "Offer").unwrap_or(false) {
                continue;
            }
            if let Some(AttrValue::Int(price)) = m.attributes.get("price") {
                if *price > max {
                    out.push(violation(
                        ConstraintId::C12,
                        vec![m.id],
                        format!("price {price} exceeds maximum {max}"),
                    ));
                }
            }
        }
        out
    }
}

fn type_pair_ok(
    ont: &crate::ontology::Ontology,
    input: &Option<String>,
    output: &Option<String>,
) -> bool {
    match (input, output) {
        (None, None) => true,
        (Some(i), Some(o)) => ont.is_subtype(i, o).unwrap_or(false),
        _ => false,
    }
}

/// D1: a merge output's type is a supertype of every active input's type.
struct MergeTyping;

impl ConstraintRule for MergeTyping {
    fn id(&self) -> ConstraintId {
        ConstraintId::D1
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let mut out = Vec::new();
        for a in &g.activities {
            if a.kind != ActivityKind::Merge {
                continue;
            }
            for o in outputs(g, a.id) {
                for i in inputs(g, a.id) {
                    if i.active && !type_pair_ok(ctx.ontology, &i.data_type, &o.data_type) {
                        out.push(violation(
                            ConstraintId::D1,
                            vec![a.id, i.id, o.id],
                            "merge output type is not a supertype of an active input".to_string(),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// D2: decision outputs carry the same type as the decision input.
struct DecisionTyping;

impl ConstraintRule for DecisionTyping {
    fn id(&self) -> ConstraintId {
        ConstraintId::D2
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Vec<Violation> {
        let g = ctx.graph;
        let mut out = Vec::new();
        for a in &g.activities {
            if a.kind != ActivityKind::Decision {
                continue;
            }
            for i in inputs(g, a.id) {
                for o in outputs(g, a.id) {
                    if i.data_type != o.data_type {
                        out.push(violation(
                            ConstraintId::D2,
                            vec![a.id, i.id, o.id],
                            "decision output type differs from the decision input".to_string(),
                        ));
                    }
                }
            }
        }
        out
    }
}
