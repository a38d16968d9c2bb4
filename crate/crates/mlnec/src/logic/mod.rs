//! Sorted first-order logic with a discrete time sort: terms, formulas,
//! clausal conversion, substitution, and grounding.

pub mod clause;
pub mod formula;
pub mod ground;
pub mod signature;
pub mod term;

pub use clause::{to_cnf, Clause, Literal, Weight};
pub use formula::Formula;
pub use ground::{formula_groundings, groundings, BindingIter};
pub use signature::{PredicateRole, Signature, SortDef};
pub use term::{Atom, Binding, Term, Var};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LogicError {
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("constant `{constant}` in sort `{sort}` collides with an existing constant")]
    DuplicateConstant { sort: String, constant: String },
    #[error("constructor `{function}` takes argument of constructed sort `{sort}`")]
    NestedConstructor { function: String, sort: String },
    #[error("`{var}` expects sort `{expected}`, got `{found}`")]
    SortMismatch { var: String, expected: String, found: String },
    #[error("`{symbol}` expects {expected} arguments, got {found}")]
    ArityMismatch { symbol: String, expected: usize, found: usize },
    #[error("time successor steps past the horizon")]
    TimeBoundary,
    #[error("existential quantifiers are not supported in clausal conversion")]
    ExistentialQuantifier,
}

#[cfg(test)]
mod tests {
    use super::signature::{EVENT_SORT, FLUENT_SORT, HAPPENS, HOLDS_AT, INITIATED_AT};
    use super::*;
    use std::collections::BTreeMap;

    fn person_sig(time_max: u32) -> Signature {
        let mut sig = Signature::new();
        sig.declare_sort("person", vec!["id1".into(), "id2".into()]).unwrap();
        sig.declare_sort("dist", vec!["25".into(), "34".into()]).unwrap();
        sig.declare_sort(EVENT_SORT, vec![]).unwrap();
        sig.declare_sort(FLUENT_SORT, vec![]).unwrap();
        sig.declare_time(time_max);
        sig.declare_function("walking", vec!["person".into()], EVENT_SORT).unwrap();
        sig.declare_function("meeting", vec!["person".into(), "person".into()], FLUENT_SORT).unwrap();
        sig.declare_predicate(HAPPENS, vec![EVENT_SORT.into(), TIME.into()], PredicateRole::Evidence)
            .unwrap();
        sig.declare_predicate(HOLDS_AT, vec![FLUENT_SORT.into(), TIME.into()], PredicateRole::Query)
            .unwrap();
        sig.declare_predicate(INITIATED_AT, vec![FLUENT_SORT.into(), TIME.into()], PredicateRole::Auxiliary)
            .unwrap();
        sig.declare_predicate(
            "close",
            vec!["person".into(), "person".into(), "dist".into(), TIME.into()],
            PredicateRole::Evidence,
        )
        .unwrap();
        sig
    }

    const TIME: &str = signature::TIME_SORT;

    fn tvar() -> Term {
        Term::var("T", TIME)
    }

    fn holds(fluent: Term, time: Term) -> Atom {
        Atom::new(HOLDS_AT, vec![fluent, time])
    }

    fn happens(event: Term, time: Term) -> Atom {
        Atom::new(HAPPENS, vec![event, time])
    }

    fn meeting_var() -> Term {
        Term::app("meeting", vec![Term::var("X", "person"), Term::var("Y", "person")])
    }

    #[test]
    fn cnf_splits_conjunction() {
        let p = Atom::new("close", vec![
            Term::Const("id1".into()),
            Term::Const("id2".into()),
            Term::Const("25".into()),
            Term::Time(0),
        ]);
        let q = Atom::new("close", vec![
            Term::Const("id1".into()),
            Term::Const("id2".into()),
            Term::Const("34".into()),
            Term::Time(0),
        ]);
        let f = Formula::and(Formula::Atom(p.clone()), Formula::Atom(q.clone()));
        let clauses = to_cnf(&f, Weight::Soft(2.0), 7).unwrap();
        assert_eq!(clauses.len(), 2);
        for c in &clauses {
            assert_eq!(c.weight.soft_value(), Some(1.0));
            assert_eq!(c.origin, 7);
            assert_eq!(c.literals.len(), 1);
        }
    }

    // the persistence rule for a fluent with termination conditions
    // (walking ^ !close) | running | exit must produce exactly the two
    // clauses {walking, running, exit, !h_t, h_t+1} and
    // {!close, running, exit, !h_t, h_t+1}
    #[test]
    fn cnf_of_persistence_rule_gives_two_clauses() {
        let h_t = holds(meeting_var(), tvar());
        let h_next = holds(meeting_var(), Term::Succ(Box::new(tvar())));
        let walking = happens(Term::app("walking", vec![Term::var("X", "person")]), tvar());
        let running = happens(Term::app("running", vec![Term::var("X", "person")]), tvar());
        let exit = happens(Term::app("exit", vec![Term::var("Y", "person")]), tvar());
        let close = Atom::new("close", vec![
            Term::var("X", "person"),
            Term::var("Y", "person"),
            Term::Const("34".into()),
            tvar(),
        ]);
        let termination = Formula::disjoin(vec![
            Formula::and(Formula::Atom(walking.clone()), Formula::not(Formula::Atom(close.clone()))),
            Formula::Atom(running.clone()),
            Formula::Atom(exit.clone()),
        ]);
        let body = Formula::and(Formula::Atom(h_t.clone()), Formula::not(termination));
        let rule = Formula::implies(body, Formula::Atom(h_next.clone()));

        let clauses = to_cnf(&rule, Weight::Soft(1.0), 0).unwrap();
        assert_eq!(clauses.len(), 2);

        let expect_a = Clause::new(
            vec![
                Literal::pos(walking),
                Literal::pos(running.clone()),
                Literal::pos(exit.clone()),
                Literal::neg(h_t.clone()),
                Literal::pos(h_next.clone()),
            ],
            Weight::Soft(0.5),
            0,
        );
        let expect_b = Clause::new(
            vec![
                Literal::neg(close),
                Literal::pos(running),
                Literal::pos(exit),
                Literal::neg(h_t),
                Literal::pos(h_next),
            ],
            Weight::Soft(0.5),
            0,
        );
        assert!(clauses.contains(&expect_a));
        assert!(clauses.contains(&expect_b));
    }

    #[test]
    fn cnf_expands_equivalence_both_directions() {
        let p = Formula::Atom(happens(Term::app("walking", vec![Term::Const("id1".into())]), Term::Time(0)));
        let q = Formula::Atom(happens(Term::app("walking", vec![Term::Const("id2".into())]), Term::Time(0)));
        let clauses = to_cnf(&Formula::iff(p, q), Weight::Hard, 0).unwrap();
        assert_eq!(clauses.len(), 2);
        assert!(clauses.iter().all(|c| c.weight.is_hard() && c.literals.len() == 2));
        // one clause per direction: {!p, q} and {p, !q}
        assert!(clauses.iter().any(|c| c.literals[0].positive != c.literals[1].positive));
    }

    #[test]
    fn cnf_rejects_existentials() {
        let f = Formula::Exists(
            vec![Var::new("X", "person")],
            Box::new(Formula::Atom(happens(Term::app("walking", vec![Term::var("X", "person")]), Term::Time(0)))),
        );
        assert_eq!(to_cnf(&f, Weight::Hard, 0), Err(LogicError::ExistentialQuantifier));
    }

    #[test]
    fn cnf_drops_tautologies_before_weight_split() {
        let p = Formula::Atom(happens(Term::app("walking", vec![Term::Const("id1".into())]), Term::Time(0)));
        let q = Formula::Atom(happens(Term::app("walking", vec![Term::Const("id2".into())]), Term::Time(0)));
        // (p | !p) ^ q is equivalent to q alone, so the full weight lands on it
        let f = Formula::and(Formula::Or(Box::new(p.clone()), Box::new(Formula::not(p))), q);
        let clauses = to_cnf(&f, Weight::Soft(3.0), 0).unwrap();
        assert_eq!(clauses.len(), 1);
        assert_eq!(clauses[0].weight.soft_value(), Some(3.0));
    }

    #[test]
    fn substitute_evaluates_time_successor() {
        let sig = person_sig(100);
        let f = Formula::Atom(holds(meeting_var(), Term::Succ(Box::new(tvar()))));
        let mut binding = BTreeMap::new();
        binding.insert("X".to_string(), Term::Const("id1".into()));
        binding.insert("Y".to_string(), Term::Const("id2".into()));
        binding.insert("T".to_string(), Term::Time(9));
        let g = f.substitute(&binding, &sig).unwrap();
        let expected = Formula::Atom(holds(
            Term::app("meeting", vec![Term::Const("id1".into()), Term::Const("id2".into())]),
            Term::Time(10),
        ));
        assert_eq!(g, expected);
    }

    #[test]
    fn substitute_keeps_unbound_variables() {
        let sig = person_sig(100);
        let f = Formula::Atom(happens(Term::app("walking", vec![Term::var("X", "person")]), tvar()));
        let mut binding = BTreeMap::new();
        binding.insert("X".to_string(), Term::Const("id1".into()));
        let g = f.substitute(&binding, &sig).unwrap();
        let expected = Formula::Atom(happens(Term::app("walking", vec![Term::Const("id1".into())]), tvar()));
        assert_eq!(g, expected);
    }

    #[test]
    fn substitute_reports_horizon_overflow() {
        let sig = person_sig(100);
        let f = Formula::Atom(holds(
            Term::app("meeting", vec![Term::Const("id1".into()), Term::Const("id2".into())]),
            Term::Succ(Box::new(tvar())),
        ));
        let mut binding = BTreeMap::new();
        binding.insert("T".to_string(), Term::Time(100));
        assert_eq!(f.substitute(&binding, &sig), Err(LogicError::TimeBoundary));
    }

    #[test]
    fn substitute_rejects_sort_mismatch() {
        let sig = person_sig(100);
        let f = Formula::Atom(happens(Term::app("walking", vec![Term::var("X", "person")]), tvar()));
        let mut binding = BTreeMap::new();
        binding.insert("X".to_string(), Term::Const("25".into()));
        match f.substitute(&binding, &sig) {
            Err(LogicError::SortMismatch { expected, found, .. }) => {
                assert_eq!(expected, "person");
                assert_eq!(found, "dist");
            }
            other => panic!("expected sort mismatch, got {other:?}"),
        }
    }

    #[test]
    fn substitution_composes_on_disjoint_bindings() {
        let sig = person_sig(100);
        let f = Formula::Atom(holds(meeting_var(), tvar()));
        let mut first = BTreeMap::new();
        first.insert("X".to_string(), Term::Const("id1".into()));
        let mut second = BTreeMap::new();
        second.insert("Y".to_string(), Term::Const("id2".into()));
        second.insert("T".to_string(), Term::Time(5));
        let mut merged = first.clone();
        merged.extend(second.clone());

        let stepwise = f.substitute(&first, &sig).unwrap().substitute(&second, &sig).unwrap();
        let joint = f.substitute(&merged, &sig).unwrap();
        assert_eq!(stepwise, joint);
    }

    // the clause from holdsAt(F,T+1) <= initiatedAt(F,T) over a 2-constant
    // fluent domain and times 0..=4 has 2 * 4 instances, one time-point
    // being lost at the boundary
    #[test]
    fn grounding_count_drops_boundary() {
        let mut sig = Signature::new();
        sig.declare_sort("person", vec!["id1".into(), "id2".into()]).unwrap();
        sig.declare_sort(EVENT_SORT, vec![]).unwrap();
        sig.declare_sort(FLUENT_SORT, vec![]).unwrap();
        sig.declare_time(4);
        sig.declare_function("f", vec!["person".into()], FLUENT_SORT).unwrap();
        sig.declare_predicate(HOLDS_AT, vec![FLUENT_SORT.into(), TIME.into()], PredicateRole::Query).unwrap();
        sig.declare_predicate(INITIATED_AT, vec![FLUENT_SORT.into(), TIME.into()], PredicateRole::Auxiliary)
            .unwrap();

        let fvar = Term::var("F", FLUENT_SORT);
        let clause = Clause::new(
            vec![
                Literal::neg(Atom::new(INITIATED_AT, vec![fvar.clone(), tvar()])),
                Literal::pos(Atom::new(HOLDS_AT, vec![fvar, Term::Succ(Box::new(tvar()))])),
            ],
            Weight::Hard,
            0,
        );
        let grounded: Vec<Clause> = groundings(&clause, &sig).unwrap().collect();
        assert_eq!(grounded.len(), 2 * 4);
        assert!(grounded.iter().all(|c| c.literals.iter().all(|l| l.atom.is_ground())));
    }

    #[test]
    fn grounding_of_ground_clause_is_identity() {
        let sig = person_sig(10);
        let clause = Clause::new(
            vec![Literal::pos(happens(Term::app("walking", vec![Term::Const("id1".into())]), Term::Time(3)))],
            Weight::Soft(1.5),
            2,
        );
        let grounded: Vec<Clause> = groundings(&clause, &sig).unwrap().collect();
        assert_eq!(grounded, vec![clause]);
    }

    #[test]
    fn grounding_enumerates_constructed_fluent_domain() {
        let sig = person_sig(10);
        // one fluent variable, no time variable: one instance per ground fluent
        let clause = Clause::new(
            vec![Literal::pos(holds(Term::var("F", FLUENT_SORT), Term::Time(0)))],
            Weight::Hard,
            0,
        );
        let grounded: Vec<Clause> = groundings(&clause, &sig).unwrap().collect();
        assert_eq!(grounded.len(), 4); // meeting over person x person
    }

    #[test]
    fn grounding_over_empty_domain_is_empty() {
        let mut sig = Signature::new();
        sig.declare_sort("ghost", vec![]).unwrap();
        sig.declare_time(3);
        sig.declare_predicate("p", vec!["ghost".into()], PredicateRole::Evidence).unwrap();
        let clause = Clause::new(
            vec![Literal::pos(Atom::new("p", vec![Term::var("X", "ghost")]))],
            Weight::Hard,
            0,
        );
        let grounded: Vec<Clause> = groundings(&clause, &sig).unwrap().collect();
        assert!(grounded.is_empty());
    }

    // brute-force check of the grounding count law: product of domain sizes
    // minus boundary drops
    #[test]
    fn grounding_count_matches_brute_force() {
        for (people, t_max, with_succ) in
            [(1u32, 3u32, true), (2, 3, true), (3, 5, true), (2, 4, false), (3, 2, false)]
        {
            let mut sig = Signature::new();
            let names: Vec<String> = (0..people).map(|i| format!("p{i}")).collect();
            sig.declare_sort("person", names).unwrap();
            sig.declare_time(t_max);
            sig.declare_predicate("close", vec!["person".into(), "person".into(), TIME.into()], PredicateRole::Evidence)
                .unwrap();
            let time_term = if with_succ { Term::Succ(Box::new(tvar())) } else { tvar() };
            let clause = Clause::new(
                vec![Literal::pos(Atom::new(
                    "close",
                    vec![Term::var("X", "person"), Term::var("Y", "person"), time_term],
                ))],
                Weight::Hard,
                0,
            );
            let expected = {
                // independent nested enumeration
                let times = if with_succ { t_max } else { t_max + 1 };
                (people as usize) * (people as usize) * times as usize
            };
            let got = groundings(&clause, &sig).unwrap().count();
            assert_eq!(got, expected, "people={people} t_max={t_max} succ={with_succ}");
        }
    }

    mod cnf_equivalence {
        use super::*;
        use proptest::prelude::*;

        fn leaf_atom(i: usize) -> Atom {
            Atom::new("p", vec![Term::Const(format!("a{i}"))])
        }

        fn formula_strategy() -> impl Strategy<Value = Formula> {
            let leaf = prop_oneof![
                (0usize..4).prop_map(|i| Formula::Atom(leaf_atom(i))),
                Just(Formula::True),
                Just(Formula::False),
            ];
            leaf.prop_recursive(4, 24, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::And(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Or(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| Formula::Implies(Box::new(a), Box::new(b))),
                    (inner.clone(), inner).prop_map(|(a, b)| Formula::Iff(Box::new(a), Box::new(b))),
                ]
            })
        }

        proptest! {
            // truth-table oracle: the clause set must agree with the input
            // formula on every assignment of its 4 possible atoms
            #[test]
            fn clause_set_is_equivalent_to_formula(f in formula_strategy()) {
                let clauses = to_cnf(&f, Weight::Hard, 0).unwrap();
                for bits in 0u32..16 {
                    let model = |a: &Atom| {
                        let i: usize = match &a.args[0] {
                            Term::Const(c) => c[1..].parse().unwrap(),
                            _ => unreachable!(),
                        };
                        bits & (1 << i) != 0
                    };
                    let direct = f.eval(&model);
                    let clausal = clauses.iter().all(|c| {
                        c.literals.iter().any(|l| l.positive == model(&l.atom))
                    });
                    prop_assert_eq!(direct, clausal);
                }
            }
        }
    }

    #[test]
    fn atom_arity_is_checked() {
        let sig = person_sig(10);
        let bad = happens(Term::app("walking", vec![Term::Const("id1".into())]), Term::Time(1));
        assert!(sig.check_atom(&bad).is_ok());
        let missing_time = Atom::new(HAPPENS, vec![Term::app("walking", vec![Term::Const("id1".into())])]);
        assert!(matches!(
            sig.check_atom(&missing_time),
            Err(LogicError::ArityMismatch { expected: 2, found: 1, .. })
        ));
    }
}
