//! Synthetic data: a crisp event-calculus runner that produces ground-truth
//! annotations, scenario generators for scripted and stochastic narratives,
//! and the evidence-erasure procedure used in robustness experiments.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bundled;
use crate::compile::{complete, CompileError};
use crate::kb::{parse_kb, Annotation, KbError, KnowledgeBaseSource, Narrative};
use crate::logic::signature::{FLUENT_SORT, HAPPENS, HOLDS_AT};
use crate::logic::term::substitute_term;
use crate::logic::{Atom, Binding, BindingIter, Formula, LogicError, Term};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SynthError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// The query atom for a ground fluent at a time-point, as used in clamps
/// and annotations.
pub fn holds_atom(fluent: &Term, t: u32) -> Atom {
    Atom::new(HOLDS_AT, vec![fluent.clone(), Term::Time(t)])
}

/// Runs the event calculus crisply: a fluent instance starts holding
/// exactly when one of its completed initiation bodies is true under the
/// closed-world evidence, stops when a termination body is true, and
/// persists otherwise. Initial values come from the narrative's clamped
/// atoms, defaulting to false. When initiation and termination fire
/// together, initiation wins.
pub fn crisp_run(kb: &KnowledgeBaseSource, narrative: &Narrative) -> Result<Annotation, SynthError> {
    let completed = complete(kb)?;
    let sig = completed.signature.with_time_max(narrative.horizon);

    struct Instance {
        fluent: Term,
        time_var: String,
        init: Formula,
        term: Formula,
    }
    let mut instances = Vec::new();
    for def in &completed.definitions {
        let mut vars = BTreeSet::new();
        def.fluent.collect_vars(&mut vars);
        for binding in BindingIter::new(vars, &sig)? {
            instances.push(Instance {
                fluent: substitute_term(&def.fluent, &binding, &sig)?,
                time_var: def.time.name.clone(),
                init: def.initiation_definition().substitute(&binding, &sig)?,
                term: def.termination_definition().substitute(&binding, &sig)?,
            });
        }
    }

    let mut state: Vec<bool> = instances
        .iter()
        .map(|inst| narrative.clamped.get(&holds_atom(&inst.fluent, 0)).copied().unwrap_or(false))
        .collect();
    let mut positives = BTreeSet::new();
    let record = |positives: &mut BTreeSet<Atom>, instances: &[Instance], state: &[bool], t: u32| {
        for (inst, held) in instances.iter().zip(state) {
            if *held {
                positives.insert(holds_atom(&inst.fluent, t));
            }
        }
    };
    record(&mut positives, &instances, &state, 0);

    for t in 0..narrative.horizon {
        let current: BTreeMap<Atom, bool> = instances
            .iter()
            .zip(&state)
            .map(|(inst, held)| (holds_atom(&inst.fluent, t), *held))
            .collect();
        let model = |atom: &Atom| {
            if atom.pred == HOLDS_AT {
                *current
                    .get(atom)
                    .unwrap_or_else(|| panic!("crisp run reads `{atom}` outside the current time-point"))
            } else {
                narrative.truth(atom)
            }
        };
        let mut next = Vec::with_capacity(instances.len());
        for (inst, held) in instances.iter().zip(&state) {
            let mut binding = Binding::new();
            binding.insert(inst.time_var.clone(), Term::Time(t));
            let initiated = inst.init.substitute(&binding, &sig)?.eval(&model);
            let terminated = inst.term.substitute(&binding, &sig)?.eval(&model);
            next.push(initiated || (*held && !terminated));
        }
        state = next;
        record(&mut positives, &instances, &state, t + 1);
    }
    Ok(Annotation { horizon: Some(narrative.horizon), positives })
}

/// A generated scenario: its knowledge base plus one annotated narrative.
#[derive(Clone, PartialEq, Debug)]
pub struct Simulated {
    pub kb: KnowledgeBaseSource,
    pub narrative: Narrative,
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Scenario {
    /// No entities, no events, horizon 0.
    Empty,
    /// Two entities over 25 time-points: one meeting initiation at 3, a
    /// reinforcing one at 10, and a termination at 20.
    ScriptedMeeting,
    /// One agent, no events at all; the flag is observed at time 0 and
    /// only persistence says anything about later times.
    InertiaDecay { horizon: u32, hold_at_start: bool },
    /// Two entities with stochastic per-frame activities and a random-walk
    /// distance driving the spatial relations.
    RandomWalkers { horizon: u32, seed: u64 },
}

/// Times of the scripted meeting initiations and termination.
pub const SCRIPTED_INITIATIONS: [u32; 2] = [3, 10];
pub const SCRIPTED_TERMINATION: u32 = 20;
pub const SCRIPTED_HORIZON: u32 = 24;

pub fn simulate(scenario: &Scenario) -> Result<Simulated, SynthError> {
    match scenario {
        Scenario::Empty => {
            let kb = parse_kb(bundled::FLAG)?;
            Ok(Simulated { kb, narrative: Narrative::empty() })
        }
        Scenario::ScriptedMeeting => scripted_meeting(),
        Scenario::InertiaDecay { horizon, hold_at_start } => inertia_decay(*horizon, *hold_at_start),
        Scenario::RandomWalkers { horizon, seed } => random_walkers(*horizon, *seed),
    }
}

fn person(id: &str) -> Term {
    Term::Const(id.into())
}

fn happens(event: &str, id: &str, t: u32) -> Atom {
    Atom::new(HAPPENS, vec![Term::app(event, vec![person(id)]), Term::Time(t)])
}

fn close(a: &str, b: &str, dist: &str, t: u32) -> Atom {
    Atom::new("close", vec![person(a), person(b), Term::Const(dist.into()), Term::Time(t)])
}

fn orientation(a: &str, b: &str, t: u32) -> Atom {
    Atom::new("orientationMove", vec![person(a), person(b), Term::Time(t)])
}

/// Clamps every fluent instance to false at time 0.
fn all_false_at_start(kb: &KnowledgeBaseSource, narrative: &mut Narrative) -> Result<(), SynthError> {
    for fluent in kb.signature.domain(FLUENT_SORT)? {
        narrative.clamped.insert(holds_atom(&fluent, 0), false);
    }
    Ok(())
}

fn annotated(kb: KnowledgeBaseSource, mut narrative: Narrative) -> Result<Simulated, SynthError> {
    let annotation = crisp_run(&kb, &narrative)?;
    narrative.annotation = Some(annotation);
    Ok(Simulated { kb, narrative })
}

fn scripted_meeting() -> Result<Simulated, SynthError> {
    let kb = parse_kb(bundled::MEETING_MOVING)?;
    let mut narrative = Narrative { horizon: SCRIPTED_HORIZON, ..Narrative::empty() };
    for t in SCRIPTED_INITIATIONS {
        narrative.evidence.insert(happens("active", "id1", t), true);
        for (a, b) in [("id1", "id2"), ("id2", "id1")] {
            narrative.evidence.insert(close(a, b, "25", t), true);
            narrative.evidence.insert(close(a, b, "34", t), true);
        }
    }
    // walking with the 34-pixel relation absent ends the meeting
    narrative.evidence.insert(happens("walking", "id1", SCRIPTED_TERMINATION), true);
    all_false_at_start(&kb, &mut narrative)?;
    annotated(kb, narrative)
}

fn inertia_decay(horizon: u32, hold_at_start: bool) -> Result<Simulated, SynthError> {
    let kb = parse_kb(bundled::FLAG)?;
    let mut narrative = Narrative { horizon, ..Narrative::empty() };
    let flag = Term::app("flag", vec![Term::Const("a1".into())]);
    narrative.clamped.insert(holds_atom(&flag, 0), hold_at_start);
    annotated(kb, narrative)
}

fn random_walkers(horizon: u32, seed: u64) -> Result<Simulated, SynthError> {
    let kb = parse_kb(bundled::MEETING_MOVING)?;
    let mut narrative = Narrative { horizon, ..Narrative::empty() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut distance: f64 = rng.random_range(10.0..60.0);
    let mut oriented = rng.random_bool(0.5);

    for t in 0..=horizon {
        for id in ["id1", "id2"] {
            let event = match rng.random_range(0..10u8) {
                0..4 => Some("walking"),
                4..6 => Some("active"),
                6..8 => Some("inactive"),
                8 => Some("running"),
                _ => None,
            };
            if let Some(event) = event {
                narrative.evidence.insert(happens(event, id, t), true);
            }
        }
        for (a, b) in [("id1", "id2"), ("id2", "id1")] {
            if distance <= 25.0 {
                narrative.evidence.insert(close(a, b, "25", t), true);
            }
            if distance <= 34.0 {
                narrative.evidence.insert(close(a, b, "34", t), true);
            }
            if oriented {
                narrative.evidence.insert(orientation(a, b, t), true);
            }
        }
        distance = (distance + rng.random_range(-8.0..8.0)).clamp(0.0, 80.0);
        if rng.random_bool(0.15) {
            oriented = !oriented;
        }
    }
    all_false_at_start(&kb, &mut narrative)?;
    annotated(kb, narrative)
}

/// Evidence-erasure plan: at every eligible time-point an interval of the
/// given lengths starts with the given probability, independently per
/// repetition and length.
#[derive(Clone, PartialEq, Debug)]
pub struct AblationSpec {
    pub start_probability: f64,
    pub lengths: Vec<u32>,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for AblationSpec {
    fn default() -> AblationSpec {
        AblationSpec { start_probability: 0.01, lengths: vec![10, 20], repetitions: 5, seed: 0 }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct AblatedNarrative {
    pub narrative: Narrative,
    pub length: u32,
    pub repetition: usize,
    /// Time-points where an erased interval begins.
    pub starts: Vec<u32>,
}

/// Times at which at least two distinct entities have events, the only
/// points where an erased interval may start.
pub fn eligible_starts(narrative: &Narrative) -> Vec<u32> {
    let mut entities: BTreeMap<u32, BTreeSet<&Term>> = BTreeMap::new();
    for (atom, value) in &narrative.evidence {
        if !value || atom.pred != HAPPENS {
            continue;
        }
        if let [Term::App(_, args), Term::Time(t)] = atom.args.as_slice() {
            if let Some(entity) = args.first() {
                entities.entry(*t).or_default().insert(entity);
            }
        }
    }
    entities.into_iter().filter(|(_, e)| e.len() >= 2).map(|(t, _)| t).collect()
}

fn atom_time(atom: &Atom) -> Option<u32> {
    match atom.args.last() {
        Some(Term::Time(t)) => Some(*t),
        _ => None,
    }
}

/// Deletes evidence (events and spatial relations alike) on randomly
/// started intervals, one degraded copy per repetition and length.
/// Clamped atoms and the annotation stay untouched.
pub fn ablate(narrative: &Narrative, spec: &AblationSpec) -> Vec<AblatedNarrative> {
    let eligible = eligible_starts(narrative);
    let mut out = Vec::with_capacity(spec.repetitions * spec.lengths.len());
    for repetition in 0..spec.repetitions {
        for &length in &spec.lengths {
            let stream = spec
                .seed
                .wrapping_add((repetition as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15))
                .wrapping_add((length as u64 + 1).wrapping_mul(0xD1B54A32D192ED03));
            let mut rng = ChaCha8Rng::seed_from_u64(stream);
            let starts: Vec<u32> = eligible
                .iter()
                .copied()
                .filter(|_| rng.random_bool(spec.start_probability))
                .collect();
            let mut degraded = narrative.clone();
            degraded.evidence.retain(|atom, _| match atom_time(atom) {
                // timeless facts are never erased
                None => true,
                Some(t) => !starts.iter().any(|&s| t >= s && t - s < length),
            });
            out.push(AblatedNarrative { narrative: degraded, length, repetition, starts });
        }
    }
    out
}
