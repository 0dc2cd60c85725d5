//! Single-document JSON format for problems and workflow instances, plus a
//! Graphviz emitter.
//!
//! One document carries the ontology, the workflow fragments, the
//! transformation catalog, user inputs, goals, policy and bounds. The
//! `Composition` workflow is implicit: the parser always creates it first
//! (workflow serial 0) and rejects attempts to declare it.

pub mod dot;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::PolicyConfig;
use crate::model::{ActivityKind, InstanceGraph, ModelError, ObjectId, COMPOSITION_WORKFLOW};
use crate::ontology::{predefined_ontology, AttrKind, AttrValue, Ontology, TypeNode};
use crate::search::{Bounds, Problem, Solution, TransformationSig};

pub use dot::emit_dot;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IoError {
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("invalid document: {0}")]
    Semantic(String),
}

impl From<ModelError> for IoError {
    fn from(e: ModelError) -> Self {
        IoError::Semantic(e.to_string())
    }
}

fn semantic(detail: impl Into<String>) -> IoError {
    IoError::Semantic(detail.into())
}

// ---------------------------------------------------------------------------
// document schema

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ontology: Option<OntologySection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    workflows: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    activities: Vec<ActivityEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    messages: Vec<MessageEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    catalog: Vec<CatalogEntry>,
    #[serde(default, rename = "userInputs", skip_serializing_if = "Vec::is_empty")]
    user_inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    goals: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<PolicySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stats: Option<StatsSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OntologySection {
    /// Merge the declared types onto the predefined vocabulary.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    predefined: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    types: Vec<TypeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TypeEntry {
    name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    parents: Vec<String>,
    #[serde(default, rename = "abstract", skip_serializing_if = "std::ops::Not::not")]
    abstract_: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attributes: BTreeMap<String, AttrKindEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum AttrKindEntry {
    Named(String),
    Enum { r#enum: Vec<String> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActivityEntry {
    name: String,
    kind: String,
    owner: String,
    #[serde(default, rename = "roleTag", skip_serializing_if = "Option::is_none")]
    role_tag: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    active: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    added: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum AttrValueEntry {
    Bool(bool),
    Int(i64),
    Symbol(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageEntry {
    name: String,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    data_type: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attributes: BTreeMap<String, AttrValueEntry>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    active: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    producer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    consumer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<u32>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    added: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogEntry {
    name: String,
    inputs: Vec<String>,
    output: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PolicySection {
    #[serde(default, rename = "maxPrice", skip_serializing_if = "Option::is_none")]
    max_price: Option<i64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    robust: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsSection {
    #[serde(rename = "maxAddedActivities")]
    max_added_activities: u32,
    #[serde(rename = "maxAddedMessages")]
    max_added_messages: u32,
    #[serde(default, rename = "maxTransformationDepth")]
    max_transformation_depth: u32,
    #[serde(default = "default_solution_limit", rename = "solutionLimit")]
    solution_limit: u32,
}

fn default_solution_limit() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsSection {
    #[serde(rename = "nodesExplored")]
    nodes_explored: u64,
    backtracks: u64,
    #[serde(rename = "addedActivities")]
    added_activities: u32,
    #[serde(rename = "addedMessages")]
    added_messages: u32,
}

// ---------------------------------------------------------------------------
// parsing

fn parse_document(input: &str) -> Result<Document, IoError> {
    serde_json::from_str(input).map_err(|e| IoError::Parse {
        line: e.line(),
        detail: e.to_string(),
    })
}

fn build_ontology(section: &Option<OntologySection>) -> Result<Ontology, IoError> {
    let section = match section {
        Some(s) => s.clone(),
        None => OntologySection {
            predefined: true,
            types: Vec::new(),
        },
    };
    let mut ont = if section.predefined {
        predefined_ontology()
    } else {
        Ontology::new()
    };
    for entry in &section.types {
        let mut attributes = BTreeMap::new();
        for (name, kind) in &entry.attributes {
            let kind = match kind {
                AttrKindEntry::Named(k) if k == "int" => AttrKind::Int,
                AttrKindEntry::Named(k) if k == "bool" => AttrKind::Bool,
                AttrKindEntry::Named(k) => {
                    return Err(semantic(format!(
                        "type {}: unknown attribute kind {k:?} (expected \"int\", \"bool\" or an enum)",
                        entry.name
                    )))
                }
                AttrKindEntry::Enum { r#enum } => {
                    if r#enum.is_empty() {
                        return Err(semantic(format!(
                            "type {}: enum attribute {name} has no symbols",
                            entry.name
                        )));
                    }
                    AttrKind::Enum(r#enum.clone())
                }
            };
            attributes.insert(name.clone(), kind);
        }
        let node = TypeNode {
            id: entry.name.clone(),
            parents: entry.parents.iter().cloned().collect(),
            abstract_: entry.abstract_,
            own_attributes: attributes,
        };
        // Merging onto an existing type unions parents and attributes.
        if let Some(existing) = ont.get(&entry.name).cloned() {
            let mut merged = existing;
            merged.parents.extend(node.parents);
            merged.own_attributes.extend(node.own_attributes);
            merged.abstract_ = node.abstract_ || merged.abstract_;
            ont.insert(merged);
        } else {
            ont.insert(node);
        }
    }
    let problems = ont.validate();
    if let Some(first) = problems.first() {
        return Err(semantic(format!("ontology invalid: {first:?}")));
    }
    Ok(ont)
}

fn attr_value(entry: &AttrValueEntry) -> AttrValue {
    match entry {
        AttrValueEntry::Bool(b) => AttrValue::Bool(*b),
        AttrValueEntry::Int(i) => AttrValue::Int(*i),
        AttrValueEntry::Symbol(s) => AttrValue::Symbol(s.clone()),
    }
}

fn build_graph(
    doc: &Document,
    ontology: &Ontology,
    reject_reserved_names: bool,
) -> Result<(InstanceGraph, Vec<ObjectId>, Vec<ObjectId>), IoError> {
    let mut graph = InstanceGraph::new();
    let comp = graph.add_workflow(COMPOSITION_WORKFLOW, true).unwrap();
    for w in &doc.workflows {
        if w == COMPOSITION_WORKFLOW {
            return Err(semantic(format!(
                "the workflow name {COMPOSITION_WORKFLOW:?} is reserved"
            )));
        }
        graph.add_workflow(w, false)?;
    }
    let mut added_acts = Vec::new();
    let mut act_by_name: BTreeMap<&str, ObjectId> = BTreeMap::new();
    for a in &doc.activities {
        if reject_reserved_names && a.name.starts_with("added_") {
            return Err(semantic(format!(
                "activity name {:?} uses the reserved added_ prefix",
                a.name
            )));
        }
        if act_by_name.contains_key(a.name.as_str()) {
            return Err(semantic(format!("duplicate activity name {:?}", a.name)));
        }
        let kind = ActivityKind::parse(&a.kind)
            .ok_or_else(|| semantic(format!("unknown activity kind {:?}", a.kind)))?;
        let owner = if a.owner == COMPOSITION_WORKFLOW {
            comp
        } else {
            graph
                .workflow_by_name(&a.owner)
                .map(|w| w.id)
                .ok_or_else(|| semantic(format!("unknown workflow {:?}", a.owner)))?
        };
        let id = graph.add_activity(kind, owner, a.active, a.role_tag.as_deref())?;
        graph.activity_mut(id).unwrap().name = a.name.clone();
        act_by_name.insert(&a.name, id);
        if a.added {
            added_acts.push(id);
        }
    }
    let mut added_msgs = Vec::new();
    let mut msg_names: BTreeMap<&str, ObjectId> = BTreeMap::new();
    for m in &doc.messages {
        if reject_reserved_names && m.name.starts_with("added_") {
            return Err(semantic(format!(
                "message name {:?} uses the reserved added_ prefix",
                m.name
            )));
        }
        if msg_names.contains_key(m.name.as_str()) {
            return Err(semantic(format!("duplicate message name {:?}", m.name)));
        }
        let attributes = m
            .attributes
            .iter()
            .map(|(k, v)| (k.clone(), attr_value(v)))
            .collect();
        let id = graph.add_message(ontology, m.data_type.as_deref(), m.active, attributes)?;
        graph.message_mut(id).unwrap().name = m.name.clone();
        if let Some(o) = m.order {
            graph.message_mut(id).unwrap().order = o;
        }
        if let Some(p) = &m.producer {
            let act = *act_by_name
                .get(p.as_str())
                .ok_or_else(|| semantic(format!("message {:?}: unknown producer {p:?}", m.name)))?;
            graph.connect_output(act, id)?;
        }
        if let Some(c) = &m.consumer {
            let act = *act_by_name
                .get(c.as_str())
                .ok_or_else(|| semantic(format!("message {:?}: unknown consumer {c:?}", m.name)))?;
            graph.connect_input(act, id)?;
        }
        msg_names.insert(&m.name, id);
        if m.added {
            added_msgs.push(id);
        }
    }
    Ok((graph, added_acts, added_msgs))
}

fn build_policy(doc: &Document, ontology: &Ontology) -> Result<PolicyConfig, IoError> {
    for t in doc.goals.iter().chain(doc.user_inputs.iter()) {
        if !ontology.contains(t) {
            return Err(semantic(format!("unknown type {t:?} in goals/userInputs")));
        }
    }
    let policy = doc.policy.clone().unwrap_or_default();
    Ok(PolicyConfig {
        max_price: policy.max_price,
        user_input_types: doc.user_inputs.iter().cloned().collect(),
        goal_types: doc.goals.clone(),
        robust: policy.robust,
    })
}

fn build_catalog(doc: &Document, ontology: &Ontology) -> Result<Vec<TransformationSig>, IoError> {
    let mut catalog = Vec::new();
    for c in &doc.catalog {
        for t in c.inputs.iter().chain(std::iter::once(&c.output)) {
            if !ontology.contains(t) {
                return Err(semantic(format!(
                    "catalog entry {:?} uses unknown type {t:?}",
                    c.name
                )));
            }
        }
        catalog.push(TransformationSig {
            name: c.name.clone(),
            input_types: c.inputs.clone(),
            output_type: c.output.clone(),
        });
    }
    Ok(catalog)
}

/// Strict problem parse: fragments only (nothing composition-owned, no
/// reserved names), at least one goal.
pub fn parse_problem(input: &str) -> Result<Problem, IoError> {
    let doc = parse_document(input)?;
    let ontology = build_ontology(&doc.ontology)?;
    let (fragments, added_acts, added_msgs) = build_graph(&doc, &ontology, true)?;
    if !added_acts.is_empty() || !added_msgs.is_empty() {
        return Err(semantic("a problem may not pre-mark objects as added"));
    }
    let comp = fragments.composition_workflow().unwrap().id;
    if fragments.activities.iter().any(|a| a.owner == comp) {
        return Err(semantic(
            "a problem may not contain composition-owned activities",
        ));
    }
    if doc.goals.is_empty() {
        return Err(semantic("a problem needs at least one goal type"));
    }
    let policy = build_policy(&doc, &ontology)?;
    let catalog = build_catalog(&doc, &ontology)?;
    let bounds = match &doc.bounds {
        Some(b) => Bounds {
            max_added_activities: b.max_added_activities,
            max_added_messages: b.max_added_messages,
            max_transformation_depth: b.max_transformation_depth,
            solution_limit: b.solution_limit,
        },
        None => Bounds::default(),
    };
    Ok(Problem {
        ontology,
        fragments,
        catalog,
        policy,
        bounds,
    })
}

/// A parsed standalone instance, as consumed by the validator.
#[derive(Debug, Clone)]
pub struct ParsedInstance {
    pub graph: InstanceGraph,
    pub ontology: Ontology,
    pub policy: PolicyConfig,
    pub added_activities: Vec<ObjectId>,
    pub added_messages: Vec<ObjectId>,
}

/// Lenient instance parse: composition-owned objects, resolved orders and
/// activation flags, and `added_` names are all allowed; goals may be empty.
pub fn parse_instance(input: &str) -> Result<ParsedInstance, IoError> {
    let doc = parse_document(input)?;
    let ontology = build_ontology(&doc.ontology)?;
    let (graph, added_activities, added_messages) = build_graph(&doc, &ontology, false)?;
    let policy = build_policy(&doc, &ontology)?;
    Ok(ParsedInstance {
        graph,
        ontology,
        policy,
        added_activities,
        added_messages,
    })
}

// ---------------------------------------------------------------------------
// emission

fn ontology_section(ontology: &Ontology) -> OntologySection {
    // Emit only the delta over the predefined vocabulary when possible.
    let predefined = predefined_ontology();
    let on_predefined = predefined
        .type_ids()
        .all(|t| ontology.get(t) == predefined.get(t));
    let mut types = Vec::new();
    for id in ontology.type_ids() {
        if on_predefined && predefined.get(id).is_some() {
            continue;
        }
        let node = ontology.get(id).unwrap();
        types.push(TypeEntry {
            name: node.id.clone(),
            parents: node.parents.iter().cloned().collect(),
            abstract_: node.abstract_,
            attributes: node
                .own_attributes
                .iter()
                .map(|(k, v)| {
                    let entry = match v {
                        AttrKind::Int => AttrKindEntry::Named("int".to_string()),
                        AttrKind::Bool => AttrKindEntry::Named("bool".to_string()),
                        AttrKind::Enum(symbols) => AttrKindEntry::Enum {
                            r#enum: symbols.clone(),
                        },
                    };
                    (k.clone(), entry)
                })
                .collect(),
        });
    }
    OntologySection {
        predefined: on_predefined,
        types,
    }
}

fn attr_value_entry(v: &AttrValue) -> AttrValueEntry {
    match v {
        AttrValue::Bool(b) => AttrValueEntry::Bool(*b),
        AttrValue::Int(i) => AttrValueEntry::Int(*i),
        AttrValue::Symbol(s) => AttrValueEntry::Symbol(s.clone()),
    }
}

fn document_for(
    problem: &Problem,
    graph: &InstanceGraph,
    added_acts: &std::collections::BTreeSet<ObjectId>,
    added_msgs: &std::collections::BTreeSet<ObjectId>,
    stats: Option<StatsSection>,
) -> Document {
    let workflows = graph
        .workflows
        .iter()
        .filter(|w| !w.is_composition)
        .map(|w| w.name.clone())
        .collect();
    let activities = graph
        .activities
        .iter()
        .map(|a| ActivityEntry {
            name: a.name.clone(),
            kind: a.kind.name().to_string(),
            owner: graph.workflow(a.owner).unwrap().name.clone(),
            role_tag: a.role_tag.clone(),
            active: a.active,
            added: added_acts.contains(&a.id),
        })
        .collect();
    let messages = graph
        .messages
        .iter()
        .map(|m| MessageEntry {
            name: m.name.clone(),
            data_type: m.data_type.clone(),
            attributes: m
                .attributes
                .iter()
                .map(|(k, v)| (k.clone(), attr_value_entry(v)))
                .collect(),
            active: m.active,
            producer: m
                .producer
                .map(|p| graph.activity(p).unwrap().name.clone()),
            consumer: m
                .consumer
                .map(|c| graph.activity(c).unwrap().name.clone()),
            order: Some(m.order),
            added: added_msgs.contains(&m.id),
        })
        .collect();
    Document {
        ontology: Some(ontology_section(&problem.ontology)),
        workflows,
        activities,
        messages,
        catalog: problem
            .catalog
            .iter()
            .map(|c| CatalogEntry {
                name: c.name.clone(),
                inputs: c.input_types.clone(),
                output: c.output_type.clone(),
            })
            .collect(),
        user_inputs: problem.policy.user_input_types.iter().cloned().collect(),
        goals: problem.policy.goal_types.clone(),
        policy: Some(PolicySection {
            max_price: problem.policy.max_price,
            robust: problem.policy.robust,
        }),
        bounds: Some(BoundsSection {
            max_added_activities: problem.bounds.max_added_activities,
            max_added_messages: problem.bounds.max_added_messages,
            max_transformation_depth: problem.bounds.max_transformation_depth,
            solution_limit: problem.bounds.solution_limit,
        }),
        stats,
    }
}

/// Byte-stable solution document. Timing is deliberately excluded so equal
/// solutions always serialize identically.
pub fn emit_solution(problem: &Problem, solution: &Solution) -> String {
    let stats = StatsSection {
        nodes_explored: solution.stats.nodes_explored,
        backtracks: solution.stats.backtracks,
        added_activities: solution.stats.added_activities,
        added_messages: solution.stats.added_messages,
    };
    let doc = document_for(
        problem,
        &solution.graph,
        &solution.added_activities,
        &solution.added_messages,
        Some(stats),
    );
    let mut out = serde_json::to_string_pretty(&doc).expect("document serializes");
    out.push('\n');
    out
}
