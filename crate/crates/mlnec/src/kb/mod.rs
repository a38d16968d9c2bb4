//! File formats: the rule DSL for knowledge bases, narrative and annotation
//! files, and the results CSV. Grammar reference lives in `docs/formats.md`.

mod lexer;
mod parser;
mod printer;
mod results;

pub use parser::{parse_annotation, parse_kb, parse_narrative};
pub use printer::{serialize_annotation, serialize_kb, serialize_narrative};
pub use results::{serialize_results, ResultsTable};

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::signature::{HOLDS_AT, INITIATED_AT, TERMINATED_AT};
use crate::logic::{Atom, Formula, Signature, Term, Weight};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum KbError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl KbError {
    pub fn parse(line: usize, msg: impl Into<String>) -> KbError {
        KbError::Parse { line, msg: msg.into() }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RuleKind {
    Initiation,
    Termination,
    Axiom,
    Constraint,
}

/// A parsed rule: a formula with a weight (`Hard` when the file gives no
/// weight prefix) and its syntactic kind.
#[derive(Clone, PartialEq, Debug)]
pub struct Rule {
    pub weight: Weight,
    pub kind: RuleKind,
    pub formula: Formula,
}

impl Rule {
    /// Head and body of an initiation or termination rule. A bare head atom
    /// counts as a rule with body `True`.
    pub fn head_body(&self) -> Option<(&Atom, Formula)> {
        match &self.formula {
            Formula::Implies(body, head) => match head.as_ref() {
                Formula::Atom(a) => Some((a, (**body).clone())),
                _ => None,
            },
            Formula::Atom(a) => Some((a, Formula::True)),
            _ => None,
        }
    }
}

/// A knowledge base as written: signature plus rules. `compiled` marks
/// output of the completion compiler re-read from disk, whose rules are
/// final formulas rather than definitions awaiting completion.
#[derive(Clone, PartialEq, Debug)]
pub struct KnowledgeBaseSource {
    pub signature: Signature,
    pub rules: Vec<Rule>,
    pub compiled: bool,
}

impl KnowledgeBaseSource {
    pub fn classify(head_formula: &Formula) -> RuleKind {
        let head = match head_formula {
            Formula::Implies(_, h) => h.as_ref(),
            other => other,
        };
        match head {
            Formula::Atom(a) if a.pred == INITIATED_AT => RuleKind::Initiation,
            Formula::Atom(a) if a.pred == TERMINATED_AT => RuleKind::Termination,
            _ => RuleKind::Constraint,
        }
    }
}

/// Observed input for one sequence: closed-world evidence over the evidence
/// predicates, optional clamped `holdsAt` observations (initial conditions),
/// and an optional ground-truth annotation.
#[derive(Clone, PartialEq, Debug)]
pub struct Narrative {
    /// Time-points run `0..=horizon`.
    pub horizon: u32,
    /// Explicit entries only; every unmentioned evidence atom is false.
    pub evidence: BTreeMap<Atom, bool>,
    /// Observed query atoms, exempt from the closed-world rule.
    pub clamped: BTreeMap<Atom, bool>,
    pub annotation: Option<Annotation>,
}

impl Narrative {
    pub fn empty() -> Narrative {
        Narrative { horizon: 0, evidence: BTreeMap::new(), clamped: BTreeMap::new(), annotation: None }
    }

    /// Closed-world truth of an evidence atom.
    pub fn truth(&self, atom: &Atom) -> bool {
        self.evidence.get(atom).copied().unwrap_or(false)
    }

    pub fn with_annotation(mut self, annotation: Annotation) -> Narrative {
        self.annotation = Some(annotation);
        self
    }
}

/// Ground truth: the set of `holdsAt` atoms that are true. Absent atoms are
/// false.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Annotation {
    pub horizon: Option<u32>,
    pub positives: BTreeSet<Atom>,
}

impl Annotation {
    pub fn holds(&self, fluent: &Term, time: u32) -> bool {
        let atom = Atom::new(HOLDS_AT, vec![fluent.clone(), Term::Time(time)]);
        self.positives.contains(&atom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::logic::signature::HAPPENS;

    fn walking(id: &str) -> Term {
        Term::app("walking", vec![Term::Const(id.into())])
    }

    #[test]
    fn parses_weighted_initiation_rule() {
        let text = "\
sort person = id1, id2
sort dist = 25, 34
event active(person)
event running(person)
fluent meeting(person, person)
evidence close(person, person, dist, time)
1.386 InitiatedAt(meeting(ID1, ID2), T) :- Happens(active(ID1), T) ^ !Happens(running(ID2), T) ^ close(ID1, ID2, 25, T)
";
        let kb = parse_kb(text).unwrap();
        assert_eq!(kb.rules.len(), 1);
        let rule = &kb.rules[0];
        assert_eq!(rule.weight, Weight::Soft(1.386));
        assert_eq!(rule.kind, RuleKind::Initiation);
        let (head, body) = rule.head_body().unwrap();
        assert_eq!(head.pred, INITIATED_AT);
        // body is a three-literal conjunction
        let atoms = body.atoms();
        assert_eq!(atoms.len(), 3);
        assert_eq!(atoms[0].pred, HAPPENS);
        assert_eq!(atoms[2].pred, "close");
    }

    #[test]
    fn unweighted_rules_are_hard() {
        let kb = parse_kb(bundled::FLAG).unwrap();
        assert_eq!(kb.rules.len(), 2);
        assert!(kb.rules.iter().all(|r| r.weight == Weight::Hard));
        assert_eq!(kb.rules[0].kind, RuleKind::Initiation);
        assert_eq!(kb.rules[1].kind, RuleKind::Termination);
    }

    #[test]
    fn rejects_wrong_arity() {
        let text = "\
sort agent = a1
event start(agent)
fluent flag(agent)
InitiatedAt(flag(X), T) :- Happens(start(X))
";
        let err = parse_kb(text).unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }

    #[test]
    fn rejects_inconsistent_variable_sorts() {
        let text = "\
sort agent = a1
event start(agent)
fluent flag(agent)
InitiatedAt(flag(T), T) :- Happens(start(T), T)
";
        let err = parse_kb(text).unwrap_err();
        assert!(err.to_string().contains("variable `T`"), "{err}");
    }

    #[test]
    fn bundled_kbs_round_trip_through_serialization() {
        for text in [bundled::MEETING_MOVING, bundled::FLAG] {
            let kb = parse_kb(text).unwrap();
            let printed = serialize_kb(&kb);
            let reparsed = parse_kb(&printed).unwrap();
            assert_eq!(kb, reparsed, "serialized form:\n{printed}");
        }
    }

    #[test]
    fn narrative_collects_evidence_and_infers_horizon() {
        let kb = parse_kb(bundled::MEETING_MOVING).unwrap();
        let text = "\
happens(walking(id1), 99)
happens(walking(id2), 99)
!close(id1, id2, 24, 101)
";
        // 24 is not a declared distance threshold
        assert!(parse_narrative(text, &kb.signature).is_err());

        let text = "\
happens(walking(id1), 99)
happens(walking(id2), 99)
!close(id1, id2, 25, 101)
";
        let n = parse_narrative(text, &kb.signature).unwrap();
        assert_eq!(n.horizon, 101);
        assert_eq!(n.evidence.len(), 3);
        let pos = Atom::new(HAPPENS, vec![walking("id1"), Term::Time(99)]);
        assert!(n.truth(&pos));
        // an explicitly negated atom reads the same as an absent one
        let neg = Atom::new(
            "close",
            vec![Term::Const("id1".into()), Term::Const("id2".into()), Term::Const("25".into()), Term::Time(101)],
        );
        let absent = Atom::new(
            "close",
            vec![Term::Const("id2".into()), Term::Const("id1".into()), Term::Const("25".into()), Term::Time(101)],
        );
        assert_eq!(n.truth(&neg), n.truth(&absent));
    }

    #[test]
    fn empty_narrative_has_zero_horizon() {
        let kb = parse_kb(bundled::FLAG).unwrap();
        let n = parse_narrative("", &kb.signature).unwrap();
        assert_eq!(n, Narrative::empty());
    }

    #[test]
    fn narrative_rejects_times_past_declared_horizon() {
        let kb = parse_kb(bundled::FLAG).unwrap();
        let text = "\
horizon 0..10
happens(start(a1), 11)
";
        let err = parse_narrative(text, &kb.signature).unwrap_err();
        assert!(err.to_string().contains("horizon"), "{err}");
    }

    #[test]
    fn narrative_rejects_contradictory_entries() {
        let kb = parse_kb(bundled::FLAG).unwrap();
        let text = "\
happens(start(a1), 2)
!happens(start(a1), 2)
";
        assert!(parse_narrative(text, &kb.signature).is_err());
    }

    #[test]
    fn narrative_round_trips() {
        let kb = parse_kb(bundled::MEETING_MOVING).unwrap();
        let text = "\
horizon 0..20
happens(active(id1), 3)
close(id1, id2, 25, 3)
!holdsAt(meeting(id1, id2), 0)
";
        let n = parse_narrative(text, &kb.signature).unwrap();
        assert_eq!(n.clamped.len(), 1);
        let reparsed = parse_narrative(&serialize_narrative(&n), &kb.signature).unwrap();
        assert_eq!(n, reparsed);
    }

    #[test]
    fn annotation_accepts_atom_lines_and_csv_rows() {
        let kb = parse_kb(bundled::MEETING_MOVING).unwrap();
        let from_atoms = parse_annotation("holdsAt(meeting(id1, id2), 4)\n!holdsAt(meeting(id1, id2), 5)\n", &kb.signature).unwrap();
        let from_csv = parse_annotation("time,fluent,truth\n4,meeting(id1,id2),true\n5,meeting(id1,id2),false\n", &kb.signature).unwrap();
        assert_eq!(from_atoms, from_csv);
        assert_eq!(from_atoms.positives.len(), 1);
        let meeting = Term::app("meeting", vec![Term::Const("id1".into()), Term::Const("id2".into())]);
        assert!(from_atoms.holds(&meeting, 4));
        assert!(!from_atoms.holds(&meeting, 5));
    }

    #[test]
    fn results_are_ordered_and_fixed_precision() {
        let table = ResultsTable::Marginal(vec![
            ("meeting(id1,id2)".into(), 5, 0.33333),
            ("meeting(id1,id2)".into(), 4, 0.75),
            ("zz_last(a)".into(), 0, 1.0),
        ]);
        let csv = serialize_results(&table);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "time,fluent,probability");
        assert_eq!(lines[1], "4,meeting(id1,id2),0.7500");
        assert_eq!(lines[2], "5,meeting(id1,id2),0.3333");

        let empty = serialize_results(&ResultsTable::Assignment(vec![]));
        assert_eq!(empty, "time,fluent,truth\n");
    }
}
