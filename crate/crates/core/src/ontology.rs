//! Datatype ontology: a multiple-inheritance DAG of named types with
//! inherited attribute schemas and subtype queries.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

/// Name of a datatype, unique per ontology.
pub type TypeId = String;

/// The distinguished root type every ontology must contain.
pub const ROOT_TYPE: &str = "DataType";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OntologyError {
    #[error("unknown type: {0}")]
    UnknownType(String),
    #[error("attribute {attr} declared with conflicting kinds among ancestors of {ty}")]
    AttributeConflict { ty: String, attr: String },
}

/// Kind of an attribute value slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrKind {
    Int,
    Bool,
    /// Closed symbol list; non-empty, symbols unique.
    Enum(Vec<String>),
}

/// A concrete attribute value carried by a message.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum AttrValue {
    Int(i64),
    Bool(bool),
    Symbol(String),
}

impl AttrValue {
    /// Whether this value fits a slot of the given kind.
    pub fn matches(&self, kind: &AttrKind) -> bool {
        match (self, kind) {
            (AttrValue::Int(_), AttrKind::Int) => true,
            (AttrValue::Bool(_), AttrKind::Bool) => true,
            (AttrValue::Symbol(s), AttrKind::Enum(symbols)) => symbols.iter().any(|x| x == s),
            _ => false,
        }
    }

    /// Default value for an unset slot of the given kind.
    pub fn default_for(kind: &AttrKind) -> AttrValue {
        match kind {
            AttrKind::Int => AttrValue::Int(0),
            AttrKind::Bool => AttrValue::Bool(false),
            AttrKind::Enum(symbols) => AttrValue::Symbol(symbols[0].clone()),
        }
    }
}

/// One node of the type DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeNode {
    pub id: TypeId,
    pub parents: BTreeSet<TypeId>,
    pub abstract_: bool,
    pub own_attributes: BTreeMap<String, AttrKind>,
}

/// Immutable after load; freely shared.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ontology {
    types: BTreeMap<TypeId, TypeNode>,
}

/// A violation found by [`Ontology::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OntologyViolation {
    Cycle(TypeId),
    UnknownParent { ty: TypeId, parent: TypeId },
    Unrooted(TypeId),
    MissingRoot,
    AttributeConflict { ty: TypeId, attr: String },
}

impl Ontology {
    pub fn new() -> Self {
        Ontology::default()
    }

    /// Insert a type node. Last insert wins on duplicate names; callers that
    /// care reject duplicates up front (the problem parser does).
    pub fn insert(&mut self, node: TypeNode) {
        self.types.insert(node.id.clone(), node);
    }

    pub fn get(&self, id: &str) -> Option<&TypeNode> {
        self.types.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.types.contains_key(id)
    }

    pub fn type_ids(&self) -> impl Iterator<Item = &TypeId> {
        self.types.keys()
    }

    pub fn is_abstract(&self, id: &str) -> Result<bool, OntologyError> {
        self.types
            .get(id)
            .map(|n| n.abstract_)
            .ok_or_else(|| OntologyError::UnknownType(id.to_string()))
    }

    /// True iff `b` is reachable from `a` via parent edges, or `a == b`.
    pub fn is_subtype(&self, a: &str, b: &str) -> Result<bool, OntologyError> {
        if !self.types.contains_key(a) {
            return Err(OntologyError::UnknownType(a.to_string()));
        }
        if !self.types.contains_key(b) {
            return Err(OntologyError::UnknownType(b.to_string()));
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![a.to_string()];
        while let Some(t) = stack.pop() {
            if t == b {
                return Ok(true);
            }
            if !seen.insert(t.clone()) {
                continue;
            }
            if let Some(node) = self.types.get(&t) {
                for p in &node.parents {
                    stack.push(p.clone());
                }
            }
        }
        Ok(false)
    }

    /// Union of own attributes over `t` and all its ancestors.
    pub fn attributes_of(&self, t: &str) -> Result<BTreeMap<String, AttrKind>, OntologyError> {
        if !self.types.contains_key(t) {
            return Err(OntologyError::UnknownType(t.to_string()));
        }
        let mut out: BTreeMap<String, AttrKind> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![t.to_string()];
        while let Some(id) = stack.pop() {
            if !seen.insert(id.clone()) {
                continue;
            }
            if let Some(node) = self.types.get(&id) {
                for (name, kind) in &node.own_attributes {
                    match out.get(name) {
                        None => {
                            out.insert(name.clone(), kind.clone());
                        }
                        Some(existing) if existing == kind => {}
                        Some(_) => {
                            return Err(OntologyError::AttributeConflict {
                                ty: t.to_string(),
                                attr: name.clone(),
                            })
                        }
                    }
                }
                for p in &node.parents {
                    stack.push(p.clone());
                }
            }
        }
        Ok(out)
    }

    /// Concrete types `c` with `is_subtype(c, t)`, in name order.
    pub fn concrete_subtypes(&self, t: &str) -> Result<Vec<TypeId>, OntologyError> {
        let mut out = Vec::new();
        for id in self.types.keys() {
            if !self.types[id].abstract_ && self.is_subtype(id, t)? {
                out.push(id.clone());
            }
        }
        Ok(out)
    }

    /// Empty iff acyclic, rooted and attribute-conflict-free.
    pub fn validate(&self) -> Vec<OntologyViolation> {
        let mut out = Vec::new();
        if !self.types.contains_key(ROOT_TYPE) {
            out.push(OntologyViolation::MissingRoot);
        }
        for (id, node) in &self.types {
            for p in &node.parents {
                if !self.types.contains_key(p) {
                    out.push(OntologyViolation::UnknownParent {
                        ty: id.clone(),
                        parent: p.clone(),
                    });
                }
            }
        }
        // Cycle detection: DFS with colors over resolvable parent edges.
        let mut state: BTreeMap<String, u8> = BTreeMap::new(); // 1 on stack, 2 done
        fn dfs(
            ont: &Ontology,
            id: &str,
            state: &mut BTreeMap<String, u8>,
            out: &mut Vec<OntologyViolation>,
        ) -> bool {
            match state.get(id) {
                Some(1) => {
                    out.push(OntologyViolation::Cycle(id.to_string()));
                    return false;
                }
                Some(2) => return true,
                _ => {}
            }
            let node = match ont.types.get(id) {
                Some(n) => n,
                None => return true,
            };
            state.insert(id.to_string(), 1);
            let mut ok = true;
            for p in &node.parents {
                if !dfs(ont, p, state, out) {
                    ok = false;
                    break;
                }
            }
            state.insert(id.to_string(), 2);
            ok
        }
        let ids: Vec<&str> = self.types.keys().map(|s| s.as_str()).collect();
        let mut acyclic = true;
        for id in &ids {
            if !dfs(self, id, &mut state, &mut out) {
                acyclic = false;
                break;
            }
        }
        if acyclic && self.types.contains_key(ROOT_TYPE) {
            for id in &ids {
                if *id != ROOT_TYPE {
                    if let Ok(false) = self.is_subtype(id, ROOT_TYPE) {
                        out.push(OntologyViolation::Unrooted(id.to_string()));
                    }
                }
            }
        }
        if acyclic {
            for id in &ids {
                if let Err(OntologyError::AttributeConflict { ty, attr }) = self.attributes_of(id) {
                    out.push(OntologyViolation::AttributeConflict { ty, attr });
                }
            }
        }
        out
    }
}

fn node(
    id: &str,
    parents: &[&str],
    abstract_: bool,
    attrs: &[(&str, AttrKind)],
) -> TypeNode {
    TypeNode {
        id: id.to_string(),
        parents: parents.iter().map(|s| s.to_string()).collect(),
        abstract_,
        own_attributes: attrs
            .iter()
            .map(|(n, k)| (n.to_string(), k.clone()))
            .collect(),
    }
}

/// The predefined producer/shipper vocabulary.
pub fn predefined_ontology() -> Ontology {
    let currency = AttrKind::Enum(vec![
        "Euro".to_string(),
        "Dollar".to_string(),
        "Yen".to_string(),
    ]);
    let mut ont = Ontology::new();
    ont.insert(node(ROOT_TYPE, &[], true, &[]));
    ont.insert(node(
        "Offer",
        &[ROOT_TYPE],
        true,
        &[("price", AttrKind::Int), ("currency", currency)],
    ));
    ont.insert(node(
        "OfferAnswer",
        &[ROOT_TYPE],
        true,
        &[("accepted", AttrKind::Bool)],
    ));
    ont.insert(node("UserAcknowledgement", &[ROOT_TYPE], false, &[]));
    ont.insert(node(
        "ProducerOffer",
        &["Offer"],
        false,
        &[("size", AttrKind::Int)],
    ));
    ont.insert(node("ProducerOfferAnswer", &["OfferAnswer"], false, &[]));
    ont.insert(node(
        "ShipperOffer",
        &["Offer"],
        false,
        &[("deliveryDays", AttrKind::Int)],
    ));
    ont.insert(node("ShipperOfferAnswer", &["OfferAnswer"], false, &[]));
    ont
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predefined_passes_validation() {
        assert_eq!(predefined_ontology().validate(), vec![]);
    }

    #[test]
    fn predefined_has_root_plus_seven_types() {
        let ont = predefined_ontology();
        assert_eq!(ont.type_ids().count(), 8);
        for t in [
            "DataType",
            "Offer",
            "OfferAnswer",
            "UserAcknowledgement",
            "ProducerOffer",
            "ProducerOfferAnswer",
            "ShipperOffer",
            "ShipperOfferAnswer",
        ] {
            assert!(ont.contains(t), "missing {t}");
        }
    }

    #[test]
    fn subtype_queries() {
        let ont = predefined_ontology();
        assert!(ont.is_subtype("ProducerOffer", "Offer").unwrap());
        assert!(ont.is_subtype("Offer", "Offer").unwrap());
        assert!(!ont.is_subtype("ShipperOffer", "ProducerOffer").unwrap());
        assert!(ont.is_subtype("ShipperOfferAnswer", "OfferAnswer").unwrap());
        assert!(ont.is_subtype("ShipperOfferAnswer", "DataType").unwrap());
        assert_eq!(
            ont.is_subtype("Nope", "Offer"),
            Err(OntologyError::UnknownType("Nope".to_string()))
        );
    }

    #[test]
    fn inherited_attributes() {
        let ont = predefined_ontology();
        let attrs = ont.attributes_of("ProducerOffer").unwrap();
        assert_eq!(attrs.len(), 3);
        assert_eq!(attrs.get("price"), Some(&AttrKind::Int));
        assert_eq!(attrs.get("size"), Some(&AttrKind::Int));
        assert!(matches!(attrs.get("currency"), Some(AttrKind::Enum(_))));

        assert!(ont.attributes_of("DataType").unwrap().is_empty());

        let answer = ont.attributes_of("ShipperOfferAnswer").unwrap();
        assert_eq!(answer.len(), 1);
        assert_eq!(answer.get("accepted"), Some(&AttrKind::Bool));
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let mut ont = predefined_ontology();
        ont.insert(node("Loop", &["Loop"], false, &[]));
        assert!(ont
            .validate()
            .iter()
            .any(|v| matches!(v, OntologyViolation::Cycle(_))));
    }

    #[test]
    fn conflicting_parent_attributes() {
        let mut ont = predefined_ontology();
        ont.insert(node("A", &[ROOT_TYPE], true, &[("price", AttrKind::Int)]));
        ont.insert(node("B", &[ROOT_TYPE], true, &[("price", AttrKind::Bool)]));
        ont.insert(node("C", &["A", "B"], false, &[]));
        assert!(ont
            .validate()
            .iter()
            .any(|v| matches!(v, OntologyViolation::AttributeConflict { .. })));
    }
}
