//! Shared fixtures for the integration tests: random ground networks,
//! brute-force reference inference, generated event-calculus bases with an
//! axiom-level model checker, and a scripted patrol suite for the ablation
//! study.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mlnec::bundled;
use mlnec::compile::complete;
use mlnec::grounding::{ClauseWeight, FormulaInfo, GroundClause, GroundLit, GroundNetwork};
use mlnec::kb::{parse_kb, Annotation, KnowledgeBaseSource, Narrative};
use mlnec::logic::signature::{FLUENT_SORT, HAPPENS, HOLDS_AT};
use mlnec::logic::term::substitute_term;
use mlnec::logic::{Atom, BindingIter, Formula, Term, Weight};
use mlnec::synth::{crisp_run, holds_atom};

pub fn atoms(n: usize) -> Vec<Atom> {
    (0..n)
        .map(|i| {
            let fluent = Term::app("q", vec![Term::Const(format!("c{i:02}"))]);
            Atom::new(HOLDS_AT, vec![fluent, Term::Time(0)])
        })
        .collect()
}

/// A network with one formula per clause, coefficients 1.
pub fn build_network(n: usize, spec: Vec<(Vec<(usize, bool)>, Weight)>) -> GroundNetwork {
    let mut infos = Vec::new();
    let mut clauses = Vec::new();
    for (i, (lits, w)) in spec.into_iter().enumerate() {
        infos.push(FormulaInfo { label: format!("f{i}"), weight: w, cnf_clauses: 1, groundings: 1, surviving: 1 });
        let weight = match w {
            Weight::Hard => ClauseWeight::Hard,
            Weight::Soft(_) => ClauseWeight::Soft { coeff: 1.0 },
        };
        let lits = lits.into_iter().map(|(atom, positive)| GroundLit { atom, positive }).collect();
        clauses.push(GroundClause { lits, origin: i, weight });
    }
    GroundNetwork::from_parts(atoms(n), infos, clauses)
}

/// Random soft clauses of 1 to 3 literals with weights in [-1.5, 1.5],
/// plus `hard` hard clauses of 2 or 3 literals.
pub fn random_network(n: usize, soft: usize, hard: usize, seed: u64) -> GroundNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = Vec::new();
    for _ in 0..soft {
        let w = rng.random_range(-1.5..1.5);
        spec.push((random_lits(&mut rng, n, 1), Weight::Soft(w)));
    }
    for _ in 0..hard {
        spec.push((random_lits(&mut rng, n, 2), Weight::Hard));
    }
    build_network(n, spec)
}

fn random_lits(rng: &mut ChaCha8Rng, n: usize, min: usize) -> Vec<(usize, bool)> {
    let len = rng.random_range(min..=3.min(n));
    let mut lits: Vec<(usize, bool)> = Vec::new();
    while lits.len() < len {
        let atom = rng.random_range(0..n);
        if lits.iter().all(|(a, _)| *a != atom) {
            lits.push((atom, rng.random()));
        }
    }
    lits
}

/// All assignments over `n` atoms in lexicographic order, false before
/// true, atom 0 most significant.
pub fn worlds(n: usize) -> impl Iterator<Item = Vec<bool>> {
    assert!(n < 63, "exhaustive enumeration only works at desk scale");
    (0u64..1 << n).map(move |i| (0..n).map(|j| (i >> (n - 1 - j)) & 1 == 1).collect())
}

/// Best hard-feasible assignment by full enumeration, preferring the
/// lexicographically smallest among score ties. `None` when every
/// assignment breaks a hard clause.
pub fn brute_map(net: &GroundNetwork) -> Option<(Vec<bool>, f64)> {
    let mut best: Option<(Vec<bool>, f64)> = None;
    for world in worlds(net.atoms.len()) {
        if !net.hard_ok(&world) {
            continue;
        }
        let score = net.world_score(&world);
        if best.as_ref().is_none_or(|(_, s)| score > s + 1e-12) {
            best = Some((world, score));
        }
    }
    best
}

/// Per-atom marginals by full enumeration.
pub fn brute_marginals(net: &GroundNetwork) -> Option<Vec<f64>> {
    let n = net.atoms.len();
    let mut z = 0.0;
    let mut true_mass = vec![0.0; n];
    for world in worlds(n) {
        if !net.hard_ok(&world) {
            continue;
        }
        let mass = net.world_score(&world).exp();
        z += mass;
        for (m, &v) in true_mass.iter_mut().zip(&world) {
            if v {
                *m += mass;
            }
        }
    }
    if z == 0.0 {
        return None;
    }
    Some(true_mass.into_iter().map(|m| m / z).collect())
}

/// Draws one assignment from the network's distribution by exhaustive
/// categorical sampling.
pub fn sample_world(net: &GroundNetwork, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let feasible: Vec<(Vec<bool>, f64)> = worlds(net.atoms.len())
        .filter(|w| net.hard_ok(w))
        .map(|w| {
            let mass = net.world_score(&w).exp();
            (w, mass)
        })
        .collect();
    let z: f64 = feasible.iter().map(|(_, m)| m).sum();
    assert!(z > 0.0, "the network admits no assignment");
    let mut u = rng.random_range(0.0..z);
    for (world, mass) in &feasible {
        u -= mass;
        if u <= 0.0 {
            return world.clone();
        }
    }
    feasible.last().expect("nonempty").0.clone()
}

/// A generated single-fluent base together with a random narrative.
pub struct SmallCase {
    pub kb: KnowledgeBaseSource,
    pub narrative: Narrative,
}

/// Random base over one fluent: up to three initiation and termination
/// rules whose bodies mix event, evidence and `HoldsAt` literals, plus a
/// short narrative with random facts and an optional time-0 observation.
pub fn random_small_case(seed: u64) -> SmallCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents: &[&str] = if seed % 2 == 0 { &["a1"] } else { &["a1", "a2"] };

    let mut text = format!("sort agent = {}\n", agents.join(", "));
    for e in ["e0", "e1", "e2"] {
        text.push_str(&format!("event {e}(agent)\n"));
    }
    text.push_str("fluent flag(agent)\nevidence sig(agent, time)\n");

    let init_rules = rng.random_range(0..=3u32);
    let term_rules = rng.random_range(0..=3u32);
    for (head, count) in [("InitiatedAt", init_rules), ("TerminatedAt", term_rules)] {
        for _ in 0..count {
            let body: Vec<String> = (0..rng.random_range(1..=2u32))
                .map(|_| {
                    let sign = if rng.random() { "" } else { "!" };
                    match rng.random_range(0..3u32) {
                        0 => format!("{sign}Happens(e{}(X), T)", rng.random_range(0..3u32)),
                        1 => format!("{sign}sig(X, T)"),
                        _ => format!("{sign}HoldsAt(flag(X), T)"),
                    }
                })
                .collect();
            text.push_str(&format!("{head}(flag(X), T) :- {}\n", body.join(" ^ ")));
        }
    }
    let kb = parse_kb(&text).expect("generated source parses");

    let horizon = rng.random_range(1..=3u32);
    let mut narrative = Narrative { horizon, ..Narrative::empty() };
    for t in 0..=horizon {
        for agent in agents {
            for e in ["e0", "e1", "e2"] {
                if rng.random_bool(0.35) {
                    let event = Term::app(e, vec![Term::Const((*agent).into())]);
                    narrative.evidence.insert(Atom::new(HAPPENS, vec![event, Term::Time(t)]), true);
                }
            }
            if rng.random_bool(0.35) {
                let args = vec![Term::Const((*agent).into()), Term::Time(t)];
                narrative.evidence.insert(Atom::new("sig", args), true);
            }
        }
    }
    for agent in agents {
        let fluent = Term::app("flag", vec![Term::Const((*agent).into())]);
        match rng.random_range(0..3u32) {
            0 => {}
            observed => {
                narrative.clamped.insert(holds_atom(&fluent, 0), observed == 1);
            }
        }
    }
    SmallCase { kb, narrative }
}

/// One fluent-instance transition with its completed initiation and
/// termination conditions, fully ground.
struct Transition {
    holds_now: Atom,
    holds_next: Atom,
    initiated: Formula,
    terminated: Formula,
}

/// Model checker for the discrete event-calculus axioms with the
/// completion equivalences substituted in: a `holdsAt` valuation is a model
/// exactly when every fluent instance follows its initiation, termination
/// and persistence conditions at every step.
pub struct AxiomChecker {
    transitions: Vec<Transition>,
}

impl AxiomChecker {
    pub fn new(kb: &KnowledgeBaseSource, narrative: &Narrative) -> AxiomChecker {
        let completed = complete(kb).expect("test base compiles");
        let sig = completed.signature.with_time_max(narrative.horizon);
        let mut transitions = Vec::new();
        for def in &completed.definitions {
            let mut vars = std::collections::BTreeSet::new();
            def.fluent.collect_vars(&mut vars);
            for binding in BindingIter::new(vars, &sig).expect("fluent sorts are enumerable") {
                let fluent = substitute_term(&def.fluent, &binding, &sig)
                    .expect("binding covers the pattern");
                for t in 0..narrative.horizon {
                    let mut at_t = binding.clone();
                    at_t.insert(def.time.name.clone(), Term::Time(t));
                    transitions.push(Transition {
                        holds_now: holds_atom(&fluent, t),
                        holds_next: holds_atom(&fluent, t + 1),
                        initiated: def
                            .initiation_definition()
                            .substitute(&at_t, &sig)
                            .expect("definition grounds"),
                        terminated: def
                            .termination_definition()
                            .substitute(&at_t, &sig)
                            .expect("definition grounds"),
                    });
                }
            }
        }
        AxiomChecker { transitions }
    }

    /// Checks one valuation of the network's atoms against the axioms.
    pub fn admits(&self, narrative: &Narrative, net_atoms: &[Atom], world: &[bool]) -> bool {
        let assignment: BTreeMap<&Atom, bool> =
            net_atoms.iter().zip(world.iter().copied()).collect();
        let model = |atom: &Atom| -> bool {
            if atom.pred == HOLDS_AT {
                if let Some(&v) = narrative.clamped.get(atom) {
                    return v;
                }
                return assignment[atom];
            }
            narrative.truth(atom)
        };
        self.transitions.iter().all(|tr| {
            let initiated = tr.initiated.eval(&model);
            let terminated = tr.terminated.eval(&model);
            let now = model(&tr.holds_now);
            let next = model(&tr.holds_next);
            (!initiated || next)
                && (!terminated || !next)
                && (!(now && !terminated) || next)
                && (!(!now && !initiated) || !next)
        })
    }
}

/// A patrol narrative over the bundled meeting base: the two entities
/// alternate between walking far apart and standing together in the close
/// range, so every in-phase time-point carries evidence for both of them.
pub struct Patrol {
    pub kb: KnowledgeBaseSource,
    pub narrative: Narrative,
    pub annotation: Annotation,
}

pub fn patrol(seed: u64, horizon: u32) -> Patrol {
    let kb = parse_kb(bundled::MEETING_MOVING).expect("bundled base parses");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut narrative = Narrative { horizon, ..Narrative::empty() };

    let happens = |event: &str, id: &str, t: u32| {
        Atom::new(HAPPENS, vec![Term::app(event, vec![Term::Const(id.into())]), Term::Time(t)])
    };
    let mut t = 0;
    let mut together = false;
    while t <= horizon {
        let span = if together { rng.random_range(10..=16) } else { rng.random_range(5..=9) };
        for _ in 0..span {
            if t > horizon {
                break;
            }
            for id in ["id1", "id2"] {
                let event = if together { "active" } else { "walking" };
                narrative.evidence.insert(happens(event, id, t), true);
            }
            if together {
                for (a, b) in [("id1", "id2"), ("id2", "id1")] {
                    for dist in ["25", "34"] {
                        let args = vec![
                            Term::Const(a.into()),
                            Term::Const(b.into()),
                            Term::Const(dist.into()),
                            Term::Time(t),
                        ];
                        narrative.evidence.insert(Atom::new("close", args), true);
                    }
                }
            }
            t += 1;
        }
        together = !together;
    }
    for fluent in kb.signature.domain(FLUENT_SORT).expect("fluent domain") {
        narrative.clamped.insert(holds_atom(&fluent, 0), false);
    }
    let annotation = crisp_run(&kb, &narrative).expect("patrol runs crisply");
    Patrol { kb, narrative, annotation }
}
