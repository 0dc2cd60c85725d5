//! Workflow composition as a configuration task: grow a partial instance of
//! a constrained workflow metamodel until every well-formedness rule holds
//! and the goal is reached, plus a standalone validator for any instance.

pub mod constraints;
pub mod io;
pub mod model;
pub mod ontology;
pub mod search;
