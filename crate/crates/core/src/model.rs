//! Metamodel instance graph: workflows, activity nodes of nine kinds,
//! typed messages, ownership and wiring relations, order assignment.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ontology::{AttrValue, Ontology, TypeId};

/// Reserved name of the workflow that owns all engine-added glue.
pub const COMPOSITION_WORKFLOW: &str = "Composition";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Namespace {
    Workflow,
    Activity,
    Message,
}

/// Dense, creation-ordered object identity; one serial sequence per namespace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId {
    pub namespace: Namespace,
    pub serial: u32,
}

impl ObjectId {
    pub fn workflow(serial: u32) -> Self {
        ObjectId { namespace: Namespace::Workflow, serial }
    }
    pub fn activity(serial: u32) -> Self {
        ObjectId { namespace: Namespace::Activity, serial }
    }
    pub fn message(serial: u32) -> Self {
        ObjectId { namespace: Namespace::Message, serial }
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.namespace {
            Namespace::Workflow => "workflow",
            Namespace::Activity => "activity",
            Namespace::Message => "message",
        };
        write!(f, "{tag}#{}", self.serial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActivityKind {
    Action,
    InitialNode,
    FinalNode,
    Fork,
    Join,
    Decision,
    Merge,
    Transformation,
    ExternalSignal,
}

impl ActivityKind {
    pub fn name(&self) -> &'static str {
        match self {
            ActivityKind::Action => "Action",
            ActivityKind::InitialNode => "InitialNode",
            ActivityKind::FinalNode => "FinalNode",
            ActivityKind::Fork => "Fork",
            ActivityKind::Join => "Join",
            ActivityKind::Decision => "Decision",
            ActivityKind::Merge => "Merge",
            ActivityKind::Transformation => "Transformation",
            ActivityKind::ExternalSignal => "ExternalSignal",
        }
    }

    /// `Split` is accepted as an input alias for `Fork`.
    pub fn parse(s: &str) -> Option<ActivityKind> {
        Some(match s {
            "Action" => ActivityKind::Action,
            "InitialNode" => ActivityKind::InitialNode,
            "FinalNode" => ActivityKind::FinalNode,
            "Fork" | "Split" => ActivityKind::Fork,
            "Join" => ActivityKind::Join,
            "Decision" => ActivityKind::Decision,
            "Merge" => ActivityKind::Merge,
            "Transformation" => ActivityKind::Transformation,
            "ExternalSignal" => ActivityKind::ExternalSignal,
            _ => return None,
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate name: {0}")]
    DuplicateName(String),
    #[error("a composition workflow already exists")]
    SecondComposition,
    #[error("unknown owner: {0}")]
    UnknownOwner(ObjectId),
    #[error("unknown id: {0}")]
    UnknownId(ObjectId),
    #[error("unknown type: {0}")]
    UnknownType(String),
    #[error("attribute schema mismatch on type {ty}: {detail}")]
    AttributeSchemaMismatch { ty: String, detail: String },
    #[error("message {0} already has a producer")]
    AlreadyProduced(ObjectId),
    #[error("message {0} already has a consumer")]
    AlreadyConsumed(ObjectId),
    #[error("no order assignment exists: message cycle through {0:?}")]
    CycleError(Vec<ObjectId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowDef {
    pub id: ObjectId,
    pub name: String,
    pub is_composition: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityNode {
    pub id: ObjectId,
    /// Unique key in problem/solution files; auto-generated when absent.
    pub name: String,
    pub kind: ActivityKind,
    pub owner: ObjectId,
    pub active: bool,
    pub role_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub id: ObjectId,
    /// Unique key in problem/solution files; auto-generated when absent.
    pub name: String,
    pub active: bool,
    pub order: u32,
    pub data_type: Option<TypeId>,
    pub producer: Option<ObjectId>,
    pub consumer: Option<ObjectId>,
    pub attributes: BTreeMap<String, AttrValue>,
}

/// The object-model instance. A value: all mutation goes through the
/// operations below on an exclusively-held graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstanceGraph {
    pub workflows: Vec<WorkflowDef>,
    pub activities: Vec<ActivityNode>,
    pub messages: Vec<Message>,
}

impl InstanceGraph {
    pub fn new() -> Self {
        InstanceGraph::default()
    }

    pub fn workflow(&self, id: ObjectId) -> Option<&WorkflowDef> {
        if id.namespace != Namespace::Workflow {
            return None;
        }
        self.workflows.get(id.serial as usize)
    }

    pub fn activity(&self, id: ObjectId) -> Option<&ActivityNode> {
        if id.namespace != Namespace::Activity {
            return None;
        }
        self.activities.get(id.serial as usize)
    }

    pub fn activity_mut(&mut self, id: ObjectId) -> Option<&mut ActivityNode> {
        if id.namespace != Namespace::Activity {
            return None;
        }
        self.activities.get_mut(id.serial as usize)
    }

    pub fn message(&self, id: ObjectId) -> Option<&Message> {
        if id.namespace != Namespace::Message {
            return None;
        }
        self.messages.get(id.serial as usize)
    }

    pub fn message_mut(&mut self, id: ObjectId) -> Option<&mut Message> {
        if id.namespace != Namespace::Message {
            return None;
        }
        self.messages.get_mut(id.serial as usize)
    }

    pub fn workflow_by_name(&self, name: &str) -> Option<&WorkflowDef> {
        self.workflows.iter().find(|w| w.name == name)
    }

    pub fn composition_workflow(&self) -> Option<&WorkflowDef> {
        self.workflows.iter().find(|w| w.is_composition)
    }

    pub fn add_workflow(&mut self, name: &str, is_composition: bool) -> Result<ObjectId, ModelError> {
        if self.workflows.iter().any(|w| w.name == name) {
            return Err(ModelError::DuplicateName(name.to_string()));
        }
        if is_composition && self.workflows.iter().any(|w| w.is_composition) {
            return Err(ModelError::SecondComposition);
        }
        let id = ObjectId::workflow(self.workflows.len() as u32);
        self.workflows.push(WorkflowDef {
            id,
            name: name.to_string(),
            is_composition,
        });
        Ok(id)
    }

    pub fn add_activity(
        &mut self,
        kind: ActivityKind,
        owner: ObjectId,
        active: bool,
        role_tag: Option<&str>,
    ) -> Result<ObjectId, ModelError> {
        if self.workflow(owner).is_none() {
            return Err(ModelError::UnknownOwner(owner));
        }
        let id = ObjectId::activity(self.activities.len() as u32);
        self.activities.push(ActivityNode {
            id,
            name: format!("a{}", id.serial),
            kind,
            owner,
            active,
            role_tag: role_tag.map(|s| s.to_string()),
        });
        Ok(id)
    }

    /// Appends a message with `order = 0`; orders are assigned later by
    /// [`InstanceGraph::assign_orders`]. Attribute names and kinds are
    /// checked against the ontology schema of `data_type`; missing
    /// attributes are allowed (decided later by search).
    pub fn add_message(
        &mut self,
        ontology: &Ontology,
        data_type: Option<&str>,
        active: bool,
        attributes: BTreeMap<String, AttrValue>,
    ) -> Result<ObjectId, ModelError> {
        if let Some(ty) = data_type {
            if !ontology.contains(ty) {
                return Err(ModelError::UnknownType(ty.to_string()));
            }
            let schema = ontology
                .attributes_of(ty)
                .map_err(|_| ModelError::UnknownType(ty.to_string()))?;
            for (name, value) in &attributes {
                match schema.get(name) {
                    None => {
                        return Err(ModelError::AttributeSchemaMismatch {
                            ty: ty.to_string(),
                            detail: format!("unknown attribute {name}"),
                        })
                    }
                    Some(kind) if !value.matches(kind) => {
                        return Err(ModelError::AttributeSchemaMismatch {
                            ty: ty.to_string(),
                            detail: format!("attribute {name} has the wrong kind"),
                        })
                    }
                    _ => {}
                }
            }
        } else if !attributes.is_empty() {
            return Err(ModelError::AttributeSchemaMismatch {
                ty: "<untyped>".to_string(),
                detail: "attributes present on an untyped message".to_string(),
            });
        }
        let id = ObjectId::message(self.messages.len() as u32);
        self.messages.push(Message {
            id,
            name: format!("m{}", id.serial),
            active,
            order: 0,
            data_type: data_type.map(|s| s.to_string()),
            producer: None,
            consumer: None,
            attributes,
        });
        Ok(id)
    }

    /// `message.producer = activity`; a message has at most one producer.
    pub fn connect_output(&mut self, activity: ObjectId, message: ObjectId) -> Result<(), ModelError> {
        if self.activity(activity).is_none() {
            return Err(ModelError::UnknownId(activity));
        }
        let msg = self.message(message).ok_or(ModelError::UnknownId(message))?;
        if msg.producer.is_some() {
            return Err(ModelError::AlreadyProduced(message));
        }
        self.message_mut(message).unwrap().producer = Some(activity);
        Ok(())
    }

    /// `message.consumer = activity`; a message has at most one consumer.
    pub fn connect_input(&mut self, activity: ObjectId, message: ObjectId) -> Result<(), ModelError> {
        if self.activity(activity).is_none() {
            return Err(ModelError::UnknownId(activity));
        }
        let msg = self.message(message).ok_or(ModelError::UnknownId(message))?;
        if msg.consumer.is_some() {
            return Err(ModelError::AlreadyConsumed(message));
        }
        self.message_mut(message).unwrap().consumer = Some(activity);
        Ok(())
    }

    /// Messages whose consumer is `activity`, in serial order.
    pub fn inputs_of(&self, activity: ObjectId) -> Result<Vec<&Message>, ModelError> {
        if self.activity(activity).is_none() {
            return Err(ModelError::UnknownId(activity));
        }
        Ok(self
            .messages
            .iter()
            .filter(|m| m.consumer == Some(activity))
            .collect())
    }

    /// Messages whose producer is `activity`, in serial order.
    pub fn outputs_of(&self, activity: ObjectId) -> Result<Vec<&Message>, ModelError> {
        if self.activity(activity).is_none() {
            return Err(ModelError::UnknownId(activity));
        }
        Ok(self
            .messages
            .iter()
            .filter(|m| m.producer == Some(activity))
            .collect())
    }

    /// Kind arity bounds. Empty iff the bounds hold for this activity.
    pub fn arity_check(&self, activity: ObjectId) -> Result<Vec<ArityViolation>, ModelError> {
        let node = self.activity(activity).ok_or(ModelError::UnknownId(activity))?;
        let n_in = self.inputs_of(activity)?.len();
        let n_out = self.outputs_of(activity)?.len();
        let mut out = Vec::new();
        let mut bad = |detail: String| {
            out.push(ArityViolation {
                activity,
                detail,
            })
        };
        match node.kind {
            ActivityKind::InitialNode => {
                if n_in != 0 {
                    bad(format!("InitialNode takes no inputs, has {n_in}"));
                }
            }
            ActivityKind::FinalNode => {
                if n_out != 0 {
                    bad(format!("FinalNode produces no outputs, has {n_out}"));
                }
            }
            ActivityKind::Fork => {
                if n_in != 1 {
                    bad(format!("Fork needs exactly 1 input, has {n_in}"));
                }
                if n_out < 1 {
                    bad("Fork needs at least 1 output".to_string());
                }
            }
            ActivityKind::Join => {
                if n_in < 2 {
                    bad(format!("Join needs at least 2 inputs, has {n_in}"));
                }
                if n_out != 1 {
                    bad(format!("Join needs exactly 1 output, has {n_out}"));
                }
            }
            ActivityKind::Decision => {
                if n_in != 1 {
                    bad(format!("Decision needs exactly 1 input, has {n_in}"));
                }
                if n_out < 2 {
                    bad(format!("Decision needs at least 2 outputs, has {n_out}"));
                }
            }
            ActivityKind::Merge => {
                if n_in < 2 {
                    bad(format!("Merge needs at least 2 inputs, has {n_in}"));
                }
                if n_out != 1 {
                    bad(format!("Merge needs exactly 1 output, has {n_out}"));
                }
            }
            ActivityKind::ExternalSignal => {
                if n_in != 0 {
                    bad(format!("ExternalSignal takes no inputs, has {n_in}"));
                }
            }
            ActivityKind::Action | ActivityKind::Transformation => {}
        }
        Ok(out)
    }

    /// Minimal order assignment: each message's order is the length of the
    /// longest producer-side chain of messages ending at it, stepping through
    /// activities (every input order strictly below every output order of the
    /// same activity). Writes the result into the graph.
    pub fn assign_orders(&mut self) -> Result<BTreeMap<ObjectId, u32>, ModelError> {
        // Edge m -> m' when m is an input and m' an output of one activity.
        let n = self.messages.len();
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indeg: Vec<usize> = vec![0; n];
        for act in &self.activities {
            let ins: Vec<usize> = self
                .messages
                .iter()
                .filter(|m| m.consumer == Some(act.id))
                .map(|m| m.id.serial as usize)
                .collect();
            let outs: Vec<usize> = self
                .messages
                .iter()
                .filter(|m| m.producer == Some(act.id))
                .map(|m| m.id.serial as usize)
                .collect();
            for &i in &ins {
                for &o in &outs {
                    succs[i].push(o);
                    indeg[o] += 1;
                }
            }
        }
        let mut order: Vec<u32> = vec![0; n];
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut done = 0usize;
        let mut head = 0usize;
        while head < queue.len() {
            let i = queue[head];
            head += 1;
            done += 1;
            for &o in &succs[i] {
                if order[i] + 1 > order[o] {
                    order[o] = order[i] + 1;
                }
                indeg[o] -= 1;
                if indeg[o] == 0 {
                    queue.push(o);
                }
            }
        }
        if done < n {
            // Report one cycle: every unresolved node has an unresolved
            // predecessor, so walking predecessors must revisit a node.
            let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
            for (i, ss) in succs.iter().enumerate() {
                for &o in ss {
                    preds[o].push(i);
                }
            }
            let start = (0..n).find(|&i| indeg[i] > 0).unwrap();
            let mut walk: Vec<usize> = Vec::new();
            let mut pos: BTreeMap<usize, usize> = BTreeMap::new();
            let mut cur = start;
            let cycle_start = loop {
                if let Some(&p) = pos.get(&cur) {
                    break p;
                }
                pos.insert(cur, walk.len());
                walk.push(cur);
                cur = *preds[cur]
                    .iter()
                    .find(|&&p| indeg[p] > 0 || pos.contains_key(&p))
                    .expect("unresolved node must have an unresolved predecessor");
            };
            let mut cycle: Vec<ObjectId> = walk[cycle_start..]
                .iter()
                .map(|&i| ObjectId::message(i as u32))
                .collect();
            cycle.reverse(); // predecessor walk runs against edge direction
            return Err(ModelError::CycleError(cycle));
        }
        let mut map = BTreeMap::new();
        for (i, m) in self.messages.iter_mut().enumerate() {
            m.order = order[i];
            map.insert(m.id, order[i]);
        }
        Ok(map)
    }
}

/// One arity bound failure, reported by [`InstanceGraph::arity_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArityViolation {
    pub activity: ObjectId,
    pub detail: String,
}
