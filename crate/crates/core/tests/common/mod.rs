//! Shared helpers for the integration suites: a tiny graph builder, one
//! minimal violating/repaired fixture pair per rule, and a seeded generator
//! of small composition problems.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use flowcompose::constraints::{
    check_all, ConstraintId, PolicyConfig, Violation, OFFER_ACCEPTANCE_TAG,
};
use flowcompose::model::{ActivityKind, InstanceGraph, ObjectId, COMPOSITION_WORKFLOW};
use flowcompose::ontology::{predefined_ontology, AttrKind, AttrValue, Ontology, TypeNode};
use flowcompose::search::{Bounds, Problem, TransformationSig};

/// A self-contained checkable instance.
pub struct Fx {
    pub graph: InstanceGraph,
    pub ontology: Ontology,
    pub policy: PolicyConfig,
}

impl Fx {
    pub fn check(&self) -> Vec<Violation> {
        check_all(&self.graph, &self.ontology, &self.policy)
    }
}

/// Terse builder over the model API for hand-made fixtures.
pub struct Build {
    pub g: InstanceGraph,
    pub ont: Ontology,
    pub comp: ObjectId,
}

impl Build {
    pub fn new() -> Build {
        let mut g = InstanceGraph::new();
        let comp = g.add_workflow(COMPOSITION_WORKFLOW, true).unwrap();
        Build {
            g,
            ont: predefined_ontology(),
            comp,
        }
    }

    pub fn wf(&mut self, name: &str) -> ObjectId {
        self.g.add_workflow(name, false).unwrap()
    }

    pub fn act(&mut self, kind: ActivityKind, owner: ObjectId, active: bool) -> ObjectId {
        self.g.add_activity(kind, owner, active, None).unwrap()
    }

    pub fn tagged(&mut self, owner: ObjectId, active: bool, tag: &str) -> ObjectId {
        self.g
            .add_activity(ActivityKind::Action, owner, active, Some(tag))
            .unwrap()
    }

    pub fn msg(&mut self, ty: Option<&str>, active: bool, order: u32) -> ObjectId {
        let id = self.g.add_message(&self.ont, ty, active, BTreeMap::new()).unwrap();
        self.g.message_mut(id).unwrap().order = order;
        id
    }

    pub fn attr(&mut self, m: ObjectId, name: &str, value: AttrValue) {
        self.g
            .message_mut(m)
            .unwrap()
            .attributes
            .insert(name.to_string(), value);
    }

    pub fn produce(&mut self, a: ObjectId, m: ObjectId) {
        self.g.connect_output(a, m).unwrap();
    }

    pub fn consume(&mut self, a: ObjectId, m: ObjectId) {
        self.g.connect_input(a, m).unwrap();
    }

    pub fn fx(self) -> Fx {
        Fx {
            graph: self.g,
            ontology: self.ont,
            policy: PolicyConfig::default(),
        }
    }

    pub fn fx_with(self, policy: PolicyConfig) -> Fx {
        Fx {
            graph: self.g,
            ontology: self.ont,
            policy,
        }
    }
}

/// One catalog entry: rule under test, fixture pair, and the full set of rule
/// ids the violating fixture is allowed to produce (C6/C7 are directional
/// readings of the same boundary law and always co-fire).
pub struct RuleCase {
    pub rule: ConstraintId,
    pub violating: Fx,
    pub repaired: Fx,
    pub allowed: Vec<ConstraintId>,
}

fn case(rule: ConstraintId, violating: Fx, repaired: Fx) -> RuleCase {
    RuleCase {
        rule,
        violating,
        repaired,
        allowed: vec![rule],
    }
}

fn boundary_pair() -> (Fx, Fx) {
    // Violating: one message crossing directly between two fragments.
    let mut b = Build::new();
    let w1 = b.wf("W1");
    let w2 = b.wf("W2");
    let a1 = b.act(ActivityKind::Action, w1, false);
    let a2 = b.act(ActivityKind::Action, w2, false);
    let m = b.msg(None, false, 0);
    b.produce(a1, m);
    b.consume(a2, m);
    let violating = b.fx();
    // Repaired: same shape inside a single fragment.
    let mut b = Build::new();
    let w1 = b.wf("W1");
    let a1 = b.act(ActivityKind::Action, w1, false);
    let a2 = b.act(ActivityKind::Action, w1, false);
    let m = b.msg(None, false, 0);
    b.produce(a1, m);
    b.consume(a2, m);
    (violating, b.fx())
}

/// The full rule catalog: minimal violating fixture plus repaired twin for
/// every rule id.
pub fn rule_cases() -> Vec<RuleCase> {
    let mut cases = Vec::new();

    // S1: abstract type on a message.
    let mut b = Build::new();
    b.msg(Some("Offer"), false, 0);
    let v = b.fx();
    let mut b = Build::new();
    b.msg(Some("ProducerOffer"), false, 0);
    cases.push(case(ConstraintId::S1, v, b.fx()));

    // S2: fork missing its input.
    let mut b = Build::new();
    let w = b.wf("W");
    let f = b.act(ActivityKind::Fork, w, false);
    let mo = b.msg(None, false, 1);
    b.produce(f, mo);
    let v = b.fx();
    let mut b = Build::new();
    let w = b.wf("W");
    let f = b.act(ActivityKind::Fork, w, false);
    let mi = b.msg(None, false, 0);
    let mo = b.msg(None, false, 1);
    b.consume(f, mi);
    b.produce(f, mo);
    cases.push(case(ConstraintId::S2, v, b.fx()));

    // S3: active message without a producer.
    let mut b = Build::new();
    let w = b.wf("W");
    let a = b.act(ActivityKind::Action, w, false);
    let m = b.msg(None, true, 0);
    b.consume(a, m);
    let v = b.fx();
    let mut b = Build::new();
    let w = b.wf("W");
    let a = b.act(ActivityKind::Action, w, false);
    let m = b.msg(None, false, 0);
    b.consume(a, m);
    cases.push(case(ConstraintId::S3, v, b.fx()));

    // C1: active action with an inactive input.
    let mut b = Build::new();
    let w = b.wf("W");
    let a = b.act(ActivityKind::Action, w, true);
    let m = b.msg(None, false, 0);
    b.consume(a, m);
    let v = b.fx();
    let mut b = Build::new();
    let w = b.wf("W");
    let a = b.act(ActivityKind::Action, w, false);
    let m = b.msg(None, false, 0);
    b.consume(a, m);
    cases.push(case(ConstraintId::C1, v, b.fx()));

    // C2: active join output over an inactive join input.
    let join_fx = |second_active: bool| {
        let mut b = Build::new();
        let w = b.wf("W");
        let i1 = b.act(ActivityKind::InitialNode, w, false);
        let i2 = b.act(ActivityKind::InitialNode, w, false);
        let j = b.act(ActivityKind::Join, w, false);
        let sink = b.act(ActivityKind::Action, w, false);
        let m1 = b.msg(None, true, 0);
        let m2 = b.msg(None, second_active, 0);
        let mo = b.msg(None, true, 1);
        b.produce(i1, m1);
        b.produce(i2, m2);
        b.consume(j, m1);
        b.consume(j, m2);
        b.produce(j, mo);
        b.consume(sink, mo);
        b.fx()
    };
    cases.push(case(ConstraintId::C2, join_fx(false), join_fx(true)));

    // C3: active fork output over an inactive fork input.
    let fork_fx = |input_active: bool| {
        let mut b = Build::new();
        let w = b.wf("W");
        let i1 = b.act(ActivityKind::InitialNode, w, false);
        let f = b.act(ActivityKind::Fork, w, false);
        let sink = b.act(ActivityKind::Action, w, false);
        let mi = b.msg(None, input_active, 0);
        let mo = b.msg(None, true, 1);
        b.produce(i1, mi);
        b.consume(f, mi);
        b.produce(f, mo);
        b.consume(sink, mo);
        b.fx()
    };
    cases.push(case(ConstraintId::C3, fork_fx(false), fork_fx(true)));

    // C4: active merge output with no active merge input.
    let merge_out_fx = |first_active: bool| {
        let mut b = Build::new();
        let w = b.wf("W");
        let i1 = b.act(ActivityKind::InitialNode, w, false);
        let i2 = b.act(ActivityKind::InitialNode, w, false);
        let g = b.act(ActivityKind::Merge, w, false);
        let sink = b.act(ActivityKind::Action, w, false);
        let m1 = b.msg(None, first_active, 0);
        let m2 = b.msg(None, false, 0);
        let mo = b.msg(None, true, 1);
        b.produce(i1, m1);
        b.produce(i2, m2);
        b.consume(g, m1);
        b.consume(g, m2);
        b.produce(g, mo);
        b.consume(sink, mo);
        b.fx()
    };
    cases.push(case(ConstraintId::C4, merge_out_fx(false), merge_out_fx(true)));

    // C5: active merge with no active input.
    let merge_fx = |first_active: bool| {
        let mut b = Build::new();
        let w = b.wf("W");
        let i1 = b.act(ActivityKind::InitialNode, w, false);
        let i2 = b.act(ActivityKind::InitialNode, w, false);
        let g = b.act(ActivityKind::Merge, w, true);
        let m1 = b.msg(None, first_active, 0);
        let m2 = b.msg(None, false, 0);
        let mo = b.msg(None, false, 1);
        b.produce(i1, m1);
        b.produce(i2, m2);
        b.consume(g, m1);
        b.consume(g, m2);
        b.produce(g, mo);
        b.fx()
    };
    cases.push(case(ConstraintId::C5, merge_fx(false), merge_fx(true)));

    // C6/C7: a message crossing two fragments directly violates both
    // directional boundary rules at once.
    let (v, r) = boundary_pair();
    cases.push(RuleCase {
        rule: ConstraintId::C6,
        violating: v,
        repaired: r,
        allowed: vec![ConstraintId::C6, ConstraintId::C7],
    });
    let (v, r) = boundary_pair();
    cases.push(RuleCase {
        rule: ConstraintId::C7,
        violating: v,
        repaired: r,
        allowed: vec![ConstraintId::C6, ConstraintId::C7],
    });

    // C8: input order not strictly below output order.
    let order_fx = |out_order: u32| {
        let mut b = Build::new();
        let w = b.wf("W");
        let a = b.act(ActivityKind::Action, w, false);
        let mi = b.msg(None, false, 2);
        let mo = b.msg(None, false, out_order);
        b.consume(a, mi);
        b.produce(a, mo);
        b.fx()
    };
    cases.push(case(ConstraintId::C8, order_fx(1), order_fx(3)));

    // C9: tagged action with an incomplete signature.
    let mut b = Build::new();
    let w = b.wf("W");
    b.tagged(w, false, OFFER_ACCEPTANCE_TAG);
    let v = b.fx();
    let mut b = Build::new();
    let w = b.wf("W");
    let maker = b.act(ActivityKind::Action, w, false);
    let taker = b.act(ActivityKind::Action, w, false);
    let oa = b.tagged(w, false, OFFER_ACCEPTANCE_TAG);
    let offer = b.msg(Some("ProducerOffer"), false, 0);
    let ack = b.msg(Some("UserAcknowledgement"), false, 0);
    let answer = b.msg(Some("ProducerOfferAnswer"), false, 1);
    b.produce(maker, offer);
    b.consume(oa, offer);
    b.consume(oa, ack);
    b.produce(oa, answer);
    b.consume(taker, answer);
    cases.push(case(ConstraintId::C9, v, b.fx()));

    // C10: fork output type differs from its input type.
    let fork_type_fx = |out_ty: &str| {
        let mut b = Build::new();
        let w = b.wf("W");
        let f = b.act(ActivityKind::Fork, w, false);
        let mi = b.msg(Some("ProducerOffer"), false, 0);
        let mo = b.msg(Some(out_ty), false, 1);
        b.consume(f, mi);
        b.produce(f, mo);
        b.fx()
    };
    cases.push(case(
        ConstraintId::C10,
        fork_type_fx("ShipperOffer"),
        fork_type_fx("ProducerOffer"),
    ));

    // C11: external signal emitting a non-user-providable type.
    let signal_fx = |ty: &str| {
        let mut b = Build::new();
        let w = b.wf("W");
        let e = b.act(ActivityKind::ExternalSignal, w, false);
        let m = b.msg(Some(ty), false, 0);
        b.produce(e, m);
        let mut policy = PolicyConfig::default();
        policy.user_input_types.insert("UserAcknowledgement".to_string());
        b.fx_with(policy)
    };
    cases.push(case(
        ConstraintId::C11,
        signal_fx("ProducerOffer"),
        signal_fx("UserAcknowledgement"),
    ));

    // C12: offer price over the policy maximum.
    let price_fx = |price: i64| {
        let mut b = Build::new();
        let m = b.msg(Some("ProducerOffer"), false, 0);
        b.attr(m, "price", AttrValue::Int(price));
        let policy = PolicyConfig {
            max_price: Some(100),
            ..PolicyConfig::default()
        };
        b.fx_with(policy)
    };
    cases.push(case(ConstraintId::C12, price_fx(200), price_fx(50)));

    // D1: merge output type not a supertype of an active input.
    let merge_type_fx = |out_ty: &str| {
        let mut b = Build::new();
        let w = b.wf("W");
        let i1 = b.act(ActivityKind::InitialNode, w, false);
        let i2 = b.act(ActivityKind::InitialNode, w, false);
        let g = b.act(ActivityKind::Merge, w, false);
        let sink = b.act(ActivityKind::Action, w, false);
        let m1 = b.msg(Some("ProducerOffer"), true, 0);
        let m2 = b.msg(None, false, 0);
        let mo = b.msg(Some(out_ty), false, 1);
        b.produce(i1, m1);
        b.produce(i2, m2);
        b.consume(g, m1);
        b.consume(g, m2);
        b.produce(g, mo);
        b.consume(sink, mo);
        b.fx()
    };
    cases.push(case(
        ConstraintId::D1,
        merge_type_fx("ShipperOffer"),
        merge_type_fx("ProducerOffer"),
    ));

    // D2: decision output type differs from its input type.
    let decision_fx = |second_out: &str| {
        let mut b = Build::new();
        let w = b.wf("W");
        let d = b.act(ActivityKind::Decision, w, false);
        let mi = b.msg(Some("ProducerOffer"), false, 0);
        let mo1 = b.msg(Some("ProducerOffer"), false, 1);
        let mo2 = b.msg(Some(second_out), false, 1);
        b.consume(d, mi);
        b.produce(d, mo1);
        b.produce(d, mo2);
        b.fx()
    };
    cases.push(case(
        ConstraintId::D2,
        decision_fx("ShipperOffer"),
        decision_fx("ProducerOffer"),
    ));

    // G1: goal type never reaches a composition-owned final node.
    let goal_policy = || PolicyConfig {
        goal_types: vec!["UserAcknowledgement".to_string()],
        ..PolicyConfig::default()
    };
    let mut b = Build::new();
    b.wf("W");
    let v = b.fx_with(goal_policy());
    let mut b = Build::new();
    let w = b.wf("W");
    let comp = b.comp;
    let a = b.act(ActivityKind::Action, w, false);
    let f = b.act(ActivityKind::FinalNode, comp, true);
    let m = b.msg(Some("UserAcknowledgement"), true, 0);
    b.produce(a, m);
    b.consume(f, m);
    cases.push(case(ConstraintId::G1, v, b.fx_with(goal_policy())));

    cases
}

// ---------------------------------------------------------------------------
// small-problem generator for the oracle equivalence gate

/// Deterministic small problem: tiny custom ontology (≤4 types), one
/// fragment with a couple of open pins, a small catalog, tight bounds.
pub fn gen_small_problem(seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Ontology: DataType plus up to three concrete types with random
    // single-step inheritance between them.
    let mut ont = Ontology::new();
    ont.insert(TypeNode {
        id: "DataType".to_string(),
        parents: BTreeSet::new(),
        abstract_: true,
        own_attributes: BTreeMap::new(),
    });
    let n_types = rng.gen_range(2..=3usize);
    let names = ["Alpha", "Beta", "Gamma"];
    let mut concrete: Vec<String> = Vec::new();
    for name in names.iter().take(n_types) {
        let parent = if concrete.is_empty() || rng.gen_bool(0.5) {
            "DataType".to_string()
        } else {
            concrete[rng.gen_range(0..concrete.len())].clone()
        };
        let mut attrs = BTreeMap::new();
        if rng.gen_bool(0.25) {
            attrs.insert("weight".to_string(), AttrKind::Int);
        }
        ont.insert(TypeNode {
            id: name.to_string(),
            parents: [parent].into_iter().collect(),
            abstract_: false,
            own_attributes: attrs,
        });
        concrete.push(name.to_string());
    }

    let pick = |rng: &mut ChaCha8Rng, pool: &[String]| -> String {
        pool[rng.gen_range(0..pool.len())].clone()
    };

    let mut g = InstanceGraph::new();
    g.add_workflow(COMPOSITION_WORKFLOW, true).unwrap();
    let w = g.add_workflow("Frag", false).unwrap();

    // Fragment shapes: an action with an open input and an open output,
    // optionally rooted by an initial node, optionally a second action.
    let a1 = g.add_activity(ActivityKind::Action, w, false, None).unwrap();
    let in_ty = pick(&mut rng, &concrete);
    let needs_input = rng.gen_bool(0.8);
    if needs_input {
        let m = g.add_message(&ont, Some(&in_ty), false, BTreeMap::new()).unwrap();
        g.connect_input(a1, m).unwrap();
    } else {
        let init = g
            .add_activity(ActivityKind::InitialNode, w, false, None)
            .unwrap();
        let m = g.add_message(&ont, None, false, BTreeMap::new()).unwrap();
        g.connect_output(init, m).unwrap();
        g.connect_input(a1, m).unwrap();
    }
    let out_ty = pick(&mut rng, &concrete);
    let out = g
        .add_message(&ont, Some(&out_ty), false, BTreeMap::new())
        .unwrap();
    g.connect_output(a1, out).unwrap();
    if rng.gen_bool(0.4) {
        // Second action fed by an untyped open pin.
        let a2 = g.add_activity(ActivityKind::Action, w, false, None).unwrap();
        let open = g.add_message(&ont, None, false, BTreeMap::new()).unwrap();
        g.connect_input(a2, open).unwrap();
        let ty = pick(&mut rng, &concrete);
        let m = g.add_message(&ont, Some(&ty), false, BTreeMap::new()).unwrap();
        g.connect_output(a2, m).unwrap();
    }

    // Catalog: up to two single-input signatures.
    let mut catalog = Vec::new();
    for i in 0..rng.gen_range(0..=2usize) {
        catalog.push(TransformationSig {
            name: format!("conv{i}"),
            input_types: vec![pick(&mut rng, &concrete)],
            output_type: pick(&mut rng, &concrete),
        });
    }

    // Policy: one goal, a random user-providable subset.
    let mut user_inputs = BTreeSet::new();
    for t in &concrete {
        if rng.gen_bool(0.5) {
            user_inputs.insert(t.clone());
        }
    }
    let goal = if rng.gen_bool(0.3) {
        "DataType".to_string()
    } else {
        pick(&mut rng, &concrete)
    };
    let policy = PolicyConfig {
        max_price: None,
        user_input_types: user_inputs,
        goal_types: vec![goal],
        robust: rng.gen_bool(0.2),
    };

    let bounds = Bounds {
        max_added_activities: rng.gen_range(1..=2),
        max_added_messages: rng.gen_range(0..=3),
        max_transformation_depth: 1,
        solution_limit: 100_000,
    };

    Problem {
        ontology: ont,
        fragments: g,
        catalog,
        policy,
        bounds,
    }
}

/// Path to a shipped fixture file.
pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}
