//! One violating/repaired fixture pair per rule: the violating instance must
//! trip its target rule (and nothing outside the allowed set), the repaired
//! twin must check clean.

mod common;

use common::rule_cases;

#[test]
fn every_rule_fires_on_its_violating_fixture() {
    for case in rule_cases() {
        let violations = case.violating.check();
        assert!(
            violations.iter().any(|v| v.constraint == case.rule),
            "{:?}: violating fixture produced no {:?} violation, got {:?}",
            case.rule,
            case.rule,
            violations
        );
        for v in &violations {
            assert!(
                case.allowed.contains(&v.constraint),
                "{:?}: unexpected extra violation {:?} ({})",
                case.rule,
                v.constraint,
                v.render()
            );
        }
    }
}

#[test]
fn every_repaired_fixture_checks_clean() {
    for case in rule_cases() {
        let violations = case.repaired.check();
        assert!(
            violations.is_empty(),
            "{:?}: repaired fixture still violates: {:?}",
            case.rule,
            violations.iter().map(|v| v.render()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn violation_rendering_names_rule_and_subjects() {
    for case in rule_cases() {
        for v in case.violating.check() {
            let text = v.render();
            assert!(
                text.starts_with(&format!("{:?} ", v.constraint)),
                "rendered violation should start with its rule id: {text}"
            );
            assert!(text.contains(" : "), "missing detail separator: {text}");
        }
    }
}
