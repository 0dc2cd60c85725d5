//! Document parsing and emission: strictness of the problem parser, leniency
//! of the instance parser, and error reporting.

mod common;

use common::fixture_path;
use flowcompose::io::{emit_solution, parse_instance, parse_problem, IoError};
use flowcompose::model::ActivityKind;
use flowcompose::search::compose;

fn minimal_doc(extra_activity_fields: &str) -> String {
    format!(
        r#"{{
  "workflows": ["W"],
  "activities": [
    {{ "name": "a", "kind": "Action", "owner": "W"{extra_activity_fields} }}
  ],
  "messages": [
    {{ "name": "m", "type": "UserAcknowledgement", "producer": "a" }}
  ],
  "userInputs": ["UserAcknowledgement"],
  "goals": ["UserAcknowledgement"],
  "bounds": {{ "maxAddedActivities": 1, "maxAddedMessages": 0, "maxTransformationDepth": 0 }}
}}"#
    )
}

#[test]
fn minimal_problem_parses() {
    let problem = parse_problem(&minimal_doc("")).unwrap();
    assert_eq!(problem.policy.goal_types, vec!["UserAcknowledgement"]);
    assert!(compose(&problem).unwrap().is_ok());
}

#[test]
fn json_syntax_errors_carry_a_line_number() {
    let text = "{\n  \"workflows\": [\"W\",\n}";
    match parse_problem(text) {
        Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error with a line, got {other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = minimal_doc("").replace("\"workflows\"", "\"workfloes\"");
    assert!(matches!(parse_problem(&text), Err(IoError::Parse { .. })));
}

#[test]
fn split_is_an_alias_for_fork() {
    let text = r#"{
      "workflows": ["W"],
      "activities": [
        { "name": "f", "kind": "Split", "owner": "W" }
      ],
      "messages": [
        { "name": "mi", "consumer": "f" },
        { "name": "mo", "type": "UserAcknowledgement", "producer": "f" }
      ],
      "goals": ["UserAcknowledgement"],
      "bounds": { "maxAddedActivities": 1, "maxAddedMessages": 0, "maxTransformationDepth": 0 }
    }"#;
    let problem = parse_problem(text).unwrap();
    let fork = problem
        .fragments
        .activities
        .iter()
        .find(|a| a.name == "f")
        .unwrap();
    assert_eq!(fork.kind, ActivityKind::Fork);
}

#[test]
fn the_composition_workflow_name_is_reserved() {
    let text = minimal_doc("").replace("[\"W\"]", "[\"W\", \"Composition\"]");
    assert!(matches!(parse_problem(&text), Err(IoError::Semantic(_))));
}

#[test]
fn problems_may_not_claim_composition_owned_activities() {
    let text = minimal_doc("").replace("\"owner\": \"W\"", "\"owner\": \"Composition\"");
    assert!(matches!(parse_problem(&text), Err(IoError::Semantic(_))));
}

#[test]
fn problems_may_not_pre_mark_added_objects() {
    let text = minimal_doc(", \"added\": true");
    assert!(matches!(parse_problem(&text), Err(IoError::Semantic(_))));
}

#[test]
fn problems_may_not_use_the_added_name_prefix() {
    let text = minimal_doc("").replace("\"name\": \"a\"", "\"name\": \"added_a\"");
    assert!(matches!(parse_problem(&text), Err(IoError::Semantic(_))));
}

#[test]
fn goals_are_mandatory_for_problems() {
    let text = minimal_doc("").replace("\"goals\": [\"UserAcknowledgement\"],", "");
    assert!(matches!(parse_problem(&text), Err(IoError::Semantic(_))));
}

#[test]
fn instance_parser_accepts_what_the_problem_parser_rejects() {
    let problem_text = std::fs::read_to_string(fixture_path("trivial.json")).unwrap();
    let problem = parse_problem(&problem_text).unwrap();
    let solution = compose(&problem).unwrap().unwrap();
    let emitted = emit_solution(&problem, &solution);
    // The emitted solution contains composition-owned added objects...
    assert!(matches!(parse_problem(&emitted), Err(IoError::Semantic(_))));
    // ...which the lenient instance parser loads faithfully.
    let parsed = parse_instance(&emitted).unwrap();
    assert_eq!(parsed.graph, solution.graph);
}

#[test]
fn emitted_solutions_deactivated_by_hand_fail_validation() {
    let problem_text = std::fs::read_to_string(fixture_path("trivial.json")).unwrap();
    let problem = parse_problem(&problem_text).unwrap();
    let solution = compose(&problem).unwrap().unwrap();
    let emitted = emit_solution(&problem, &solution);
    // Deactivate the token feeding the active action (the document lists the
    // three activities first, then the messages in serial order).
    let needle = "\"active\": true";
    let at = emitted
        .match_indices(needle)
        .nth(3)
        .map(|(i, _)| i)
        .expect("expected at least four active flags");
    let mut sabotaged = emitted.clone();
    sabotaged.replace_range(at..at + needle.len(), "\"active\": false");
    let parsed = parse_instance(&sabotaged).unwrap();
    let violations =
        flowcompose::constraints::check_all(&parsed.graph, &parsed.ontology, &parsed.policy);
    assert!(!violations.is_empty());
}

#[test]
fn unknown_type_names_are_semantic_errors() {
    let text = minimal_doc("").replace("UserAcknowledgement\", \"producer", "NoSuchType\", \"producer");
    assert!(matches!(parse_problem(&text), Err(IoError::Semantic(_))));
}
