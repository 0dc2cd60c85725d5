//! The configuration engine: extends a partial instance graph with bounded
//! numbers of composition-owned objects and wiring decisions until every
//! rule holds and the goal is reached.

mod canon;
mod engine;
mod finalize;
mod oracle;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::constraints::PolicyConfig;
use crate::model::{InstanceGraph, ObjectId, COMPOSITION_WORKFLOW};
use crate::ontology::{Ontology, TypeId};

pub use canon::{canonical_key, canonicalize};
pub use finalize::{finalize_candidate, relevant_types, transformation_depth};
pub use oracle::{brute_force_oracle, OracleError};

/// One catalog transformation signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformationSig {
    pub name: String,
    pub input_types: Vec<TypeId>,
    pub output_type: TypeId,
}

/// Finite search bounds; they make the otherwise semi-decidable problem
/// terminate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_added_activities: u32,
    pub max_added_messages: u32,
    pub max_transformation_depth: u32,
    pub solution_limit: u32,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_added_activities: 0,
            max_added_messages: 0,
            max_transformation_depth: 0,
            solution_limit: 1,
        }
    }
}

/// The full input bundle to the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub ontology: Ontology,
    /// Pre-wired fragments; open pins are messages lacking a producer or
    /// consumer. Contains the (empty) composition workflow.
    pub fragments: InstanceGraph,
    pub catalog: Vec<TransformationSig>,
    pub policy: PolicyConfig,
    pub bounds: Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub nodes_explored: u64,
    pub backtracks: u64,
    pub added_activities: u32,
    pub added_messages: u32,
    pub elapsed_ms: u64,
}

/// A complete, validated composed workflow.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub graph: InstanceGraph,
    pub added_activities: BTreeSet<ObjectId>,
    pub added_messages: BTreeSet<ObjectId>,
    pub stats: SearchStats,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
}

/// Why `compose` returned no solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unsat;

/// Validates the `Problem` invariants shared by all entry points.
pub fn validate_problem(problem: &Problem) -> Result<(), SearchError> {
    let bad = |d: String| Err(SearchError::MalformedProblem(d));
    let ont_violations = problem.ontology.validate();
    if !ont_violations.is_empty() {
        return bad(format!("ontology invalid: {:?}", ont_violations[0]));
    }
    let comp = match problem.fragments.composition_workflow() {
        Some(w) => w,
        None => return bad("missing composition workflow".to_string()),
    };
    if comp.name != COMPOSITION_WORKFLOW {
        return bad(format!(
            "composition workflow must be named {COMPOSITION_WORKFLOW}"
        ));
    }
    let comp_id = comp.id;
    if problem.fragments.activities.iter().any(|a| a.owner == comp_id) {
        return bad("fragments may not contain composition-owned activities".to_string());
    }
    for a in &problem.fragments.activities {
        if problem.fragments.workflow(a.owner).is_none() {
            return bad(format!("activity {} has unresolved owner", a.id));
        }
    }
    for m in &problem.fragments.messages {
        if let Some(p) = m.producer {
            if problem.fragments.activity(p).is_none() {
                return bad(format!("message {} has unresolved producer", m.id));
            }
        }
        if let Some(c) = m.consumer {
            if problem.fragments.activity(c).is_none() {
                return bad(format!("message {} has unresolved consumer", m.id));
            }
        }
        if let Some(ty) = &m.data_type {
            if !problem.ontology.contains(ty) {
                return bad(format!("message {} has unknown type {ty}", m.id));
            }
            if problem.ontology.is_abstract(ty).unwrap_or(false) {
                return bad(format!("message {} has abstract type {ty}", m.id));
            }
        }
    }
    if problem.policy.goal_types.is_empty() {
        return bad("goal type set is empty".to_string());
    }
    for g in &problem.policy.goal_types {
        if !problem.ontology.contains(g) {
            return bad(format!("goal type {g} is unknown"));
        }
    }
    for t in &problem.policy.user_input_types {
        if !problem.ontology.contains(t) {
            return bad(format!("user input type {t} is unknown"));
        }
    }
    for sig in &problem.catalog {
        if sig.input_types.is_empty() {
            return bad(format!("transformation {} has no inputs", sig.name));
        }
        for t in sig.input_types.iter().chain(std::iter::once(&sig.output_type)) {
            if !problem.ontology.contains(t) {
                return bad(format!("transformation {} uses unknown type {t}", sig.name));
            }
        }
    }
    Ok(())
}

/// Returns the first solution of the deterministic search, or `Unsat` when
/// none exists within bounds.
pub fn compose(problem: &Problem) -> Result<Result<Solution, Unsat>, SearchError> {
    validate_problem(problem)?;
    let mut solutions = engine::search(problem, 1);
    Ok(match solutions.pop() {
        Some(s) => Ok(s),
        None => Err(Unsat),
    })
}

/// All solutions within bounds in deterministic search order, truncated at
/// `solution_limit`, each canonicalized and deduplicated.
pub fn enumerate(problem: &Problem) -> Result<Vec<Solution>, SearchError> {
    validate_problem(problem)?;
    Ok(engine::search(problem, problem.bounds.solution_limit as usize))
}
