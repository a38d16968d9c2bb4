//! MAP inference as weighted MaxSAT: an exact branch-and-bound solver per
//! connected component, and a restarted noisy local search for networks
//! beyond its reach.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{components, Component, IndexList, InferError, MapAssignment};
use crate::grounding::{ClauseWeight, GroundNetwork};

/// Default bound on the atom count of any single connected component.
pub const MAP_CAP: usize = 24;

pub fn map_exact(net: &GroundNetwork) -> Result<MapAssignment, InferError> {
    map_exact_with_cap(net, MAP_CAP)
}

/// Finds the assignment maximising the summed weight of satisfied soft
/// clauses among those satisfying every hard clause. Ties resolve to the
/// lexicographically smallest assignment in atom order, false before true.
pub fn map_exact_with_cap(net: &GroundNetwork, cap: usize) -> Result<MapAssignment, InferError> {
    if net.clauses.iter().any(|c| c.lits.is_empty() && c.weight == ClauseWeight::Hard) {
        return Err(InferError::Unsatisfiable);
    }
    let comps = components(net);
    if let Some(c) = comps.iter().find(|c| c.atoms.len() > cap) {
        return Err(InferError::TooLarge { atoms: c.atoms.len(), cap });
    }
    let solved: Vec<(Vec<bool>, f64)> = comps
        .par_iter()
        .map(|c| branch_and_bound(net, c))
        .collect::<Result<_, _>>()?;

    let mut values = vec![false; net.atoms.len()];
    let mut score = 0.0;
    for (comp, (assignment, comp_score)) in comps.iter().zip(solved) {
        for (atom, v) in comp.atoms.iter().zip(assignment) {
            values[*atom] = v;
        }
        score += comp_score;
    }
    Ok(MapAssignment { atoms: net.atoms.clone(), values, score, hard_feasible: true })
}

struct SearchState {
    /// Per clause: satisfied flag and count of unassigned literals.
    sat: Vec<bool>,
    undecided: Vec<usize>,
    /// Soft weight currently guaranteed satisfied.
    score: f64,
    /// Largest additional soft weight still reachable.
    potential: f64,
}

enum Change {
    BecameSat(usize),
    Decremented { clause: usize, falsified_soft: bool },
}

fn branch_and_bound(net: &GroundNetwork, comp: &Component) -> Result<(Vec<bool>, f64), InferError> {
    let k = comp.atoms.len();
    let local: std::collections::BTreeMap<usize, usize> =
        comp.atoms.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let mut occurrences: Vec<Vec<(usize, bool)>> = vec![Vec::new(); k];
    let mut weights: Vec<Option<f64>> = Vec::new();
    for (ci, &gi) in comp.clauses.iter().enumerate() {
        let clause = &net.clauses[gi];
        weights.push(net.clause_weight(clause));
        for lit in &clause.lits {
            occurrences[local[&lit.atom]].push((ci, lit.positive));
        }
    }
    let mut state = SearchState {
        sat: vec![false; weights.len()],
        undecided: comp.clauses.iter().map(|&gi| net.clauses[gi].lits.len()).collect(),
        score: 0.0,
        potential: weights.iter().flatten().map(|w| w.max(0.0)).sum(),
    };
    let mut assign = vec![false; k];
    let mut best: Option<(Vec<bool>, f64)> = None;
    descend(&occurrences, &weights, &mut state, &mut assign, 0, &mut best);
    best.ok_or(InferError::Unsatisfiable)
}

fn descend(
    occurrences: &[Vec<(usize, bool)>],
    weights: &[Option<f64>],
    state: &mut SearchState,
    assign: &mut Vec<bool>,
    depth: usize,
    best: &mut Option<(Vec<bool>, f64)>,
) {
    if depth == assign.len() {
        // recompute in clause order: the incremental score drifts across
        // branches, which would break ties that must go to earlier leaves
        let score: f64 = state
            .sat
            .iter()
            .zip(weights)
            .filter(|(sat, _)| **sat)
            .filter_map(|(_, w)| *w)
            .sum();
        match best {
            Some((_, s)) if score <= *s => {}
            _ => *best = Some((assign.clone(), score)),
        }
        return;
    }
    for value in [false, true] {
        assign[depth] = value;
        let (feasible, changes) = apply(occurrences, weights, state, depth, value);
        let bounded = best.as_ref().is_some_and(|(_, s)| state.score + state.potential <= *s);
        if feasible && !bounded {
            descend(occurrences, weights, state, assign, depth + 1, best);
        }
        revert(weights, state, changes);
    }
    assign[depth] = false;
}

fn apply(
    occurrences: &[Vec<(usize, bool)>],
    weights: &[Option<f64>],
    state: &mut SearchState,
    atom: usize,
    value: bool,
) -> (bool, Vec<Change>) {
    let mut changes = Vec::new();
    let mut feasible = true;
    for &(ci, positive) in &occurrences[atom] {
        if state.sat[ci] {
            continue;
        }
        if positive == value {
            state.sat[ci] = true;
            if let Some(w) = weights[ci] {
                state.score += w;
                state.potential -= w.max(0.0);
            }
            changes.push(Change::BecameSat(ci));
        } else {
            state.undecided[ci] -= 1;
            let falsified = state.undecided[ci] == 0;
            match (falsified, weights[ci]) {
                (true, None) => feasible = false,
                (true, Some(w)) => state.potential -= w.max(0.0),
                _ => {}
            }
            changes.push(Change::Decremented { clause: ci, falsified_soft: falsified && weights[ci].is_some() });
        }
    }
    (feasible, changes)
}

fn revert(weights: &[Option<f64>], state: &mut SearchState, changes: Vec<Change>) {
    for change in changes.into_iter().rev() {
        match change {
            Change::BecameSat(ci) => {
                state.sat[ci] = false;
                if let Some(w) = weights[ci] {
                    state.score -= w;
                    state.potential += w.max(0.0);
                }
            }
            Change::Decremented { clause, falsified_soft } => {
                state.undecided[clause] += 1;
                if falsified_soft {
                    state.potential += weights[clause].expect("soft clause").max(0.0);
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct WalkOptions {
    /// Flip budget per restart.
    pub flips: usize,
    pub restarts: usize,
    /// Probability of a random move over a greedy one.
    pub noise: f64,
    pub seed: u64,
}

impl Default for WalkOptions {
    fn default() -> WalkOptions {
        WalkOptions { flips: 10_000, restarts: 10, noise: 0.3, seed: 0 }
    }
}

/// MaxWalkSAT-style search: repairs violated hard clauses first, then
/// chases unsatisfied positive and satisfied negative soft clauses.
/// Returns the best hard-feasible state seen, or the least-violating state
/// with `hard_feasible` unset when the budget never reaches feasibility.
pub fn map_localsearch(net: &GroundNetwork, opts: &WalkOptions) -> Result<MapAssignment, InferError> {
    let runs: Vec<Outcome> = (0..opts.restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| walk_once(net, opts, r))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.preferable_to(&a) { b } else { a })
        .expect("at least one restart");
    Ok(MapAssignment {
        atoms: net.atoms.clone(),
        values: best.state,
        score: best.score,
        hard_feasible: best.violations == 0,
    })
}

struct Outcome {
    violations: usize,
    score: f64,
    state: Vec<bool>,
}

impl Outcome {
    /// Strict preference, so earlier restarts win ties.
    fn preferable_to(&self, other: &Outcome) -> bool {
        (self.violations, -self.score) < (other.violations, -other.score)
    }
}

fn walk_once(net: &GroundNetwork, opts: &WalkOptions, restart: u64) -> Outcome {
    let n = net.atoms.len();
    let nc = net.clauses.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(restart.wrapping_mul(0x9E3779B97F4A7C15)));
    let weights: Vec<Option<f64>> = net.clauses.iter().map(|c| net.clause_weight(c)).collect();
    let mut state: Vec<bool> = if restart == 0 {
        vec![false; n]
    } else {
        (0..n).map(|_| rng.random()).collect()
    };

    let mut occurrences: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    let mut sat = vec![0u32; nc];
    let mut score = 0.0;
    let mut empty_hard = 0usize;
    let mut violated_hard = IndexList::new(nc);
    let mut violated_pos = IndexList::new(nc);
    let mut satisfied_neg = IndexList::new(nc);
    for (ci, clause) in net.clauses.iter().enumerate() {
        if clause.lits.is_empty() {
            // unfixable, and an empty soft clause never scores
            empty_hard += (weights[ci].is_none()) as usize;
            continue;
        }
        for l in &clause.lits {
            occurrences[l.atom].push((ci, l.positive));
            if state[l.atom] == l.positive {
                sat[ci] += 1;
            }
        }
        match (sat[ci] > 0, weights[ci]) {
            (false, None) => violated_hard.insert(ci),
            (false, Some(w)) if w > 0.0 => violated_pos.insert(ci),
            (true, Some(w)) => {
                score += w;
                if w < 0.0 {
                    satisfied_neg.insert(ci);
                }
            }
            _ => {}
        }
    }

    let mut best = Outcome { violations: empty_hard + violated_hard.len(), score, state: state.clone() };
    for _ in 0..opts.flips {
        let target = if !violated_hard.is_empty() {
            violated_hard.get(rng.random_range(0..violated_hard.len()))
        } else if violated_pos.len() + satisfied_neg.len() > 0 {
            let i = rng.random_range(0..violated_pos.len() + satisfied_neg.len());
            if i < violated_pos.len() {
                violated_pos.get(i)
            } else {
                satisfied_neg.get(i - violated_pos.len())
            }
        } else {
            break; // every clause is as good as it can get
        };
        let lits = &net.clauses[target].lits;
        let atom = if rng.random_bool(opts.noise) {
            lits[rng.random_range(0..lits.len())].atom
        } else {
            let mut chosen = lits[0].atom;
            let mut best_key = (i64::MAX, f64::INFINITY);
            for l in lits {
                let (dh, ds) = flip_delta(&occurrences[l.atom], &weights, &sat, state[l.atom]);
                if (dh, -ds) < best_key {
                    best_key = (dh, -ds);
                    chosen = l.atom;
                }
            }
            chosen
        };
        for &(ci, positive) in &occurrences[atom] {
            let was = sat[ci] > 0;
            if state[atom] == positive {
                sat[ci] -= 1;
            } else {
                sat[ci] += 1;
            }
            let now = sat[ci] > 0;
            if was == now {
                continue;
            }
            match weights[ci] {
                None => {
                    if now {
                        violated_hard.remove(ci);
                    } else {
                        violated_hard.insert(ci);
                    }
                }
                Some(w) => {
                    if now {
                        score += w;
                        if w > 0.0 {
                            violated_pos.remove(ci);
                        } else if w < 0.0 {
                            satisfied_neg.insert(ci);
                        }
                    } else {
                        score -= w;
                        if w > 0.0 {
                            violated_pos.insert(ci);
                        } else if w < 0.0 {
                            satisfied_neg.remove(ci);
                        }
                    }
                }
            }
        }
        state[atom] = !state[atom];
        let violations = empty_hard + violated_hard.len();
        if (violations, -score) < (best.violations, -best.score) {
            best = Outcome { violations, score, state: state.clone() };
        }
    }
    best
}

/// Effect of flipping one atom: change in violated-hard count and in the
/// satisfied soft weight.
fn flip_delta(occurrences: &[(usize, bool)], weights: &[Option<f64>], sat: &[u32], current: bool) -> (i64, f64) {
    let mut dh = 0i64;
    let mut ds = 0.0;
    for &(ci, positive) in occurrences {
        let becomes_sat = sat[ci] == 0 && positive != current;
        let becomes_unsat = sat[ci] == 1 && positive == current;
        match weights[ci] {
            None => dh += becomes_unsat as i64 - becomes_sat as i64,
            Some(w) => ds += w * (becomes_sat as i64 - becomes_unsat as i64) as f64,
        }
    }
    (dh, ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::testnet;
    use crate::logic::Weight;

    /// Lexicographically first argmax over all worlds.
    fn brute_map(net: &GroundNetwork) -> Option<(Vec<bool>, f64)> {
        let n = net.atoms.len();
        let mut best: Option<(Vec<bool>, f64)> = None;
        for pattern in 0u32..1 << n {
            // bit i of the counter is atom n-1-i so patterns ascend
            // lexicographically over (atom0, atom1, ...)
            let world: Vec<bool> = (0..n).map(|i| pattern >> (n - 1 - i) & 1 == 1).collect();
            if !net.hard_ok(&world) {
                continue;
            }
            let score = net.world_score(&world);
            if best.as_ref().is_none_or(|(_, s)| score > *s) {
                best = Some((world, score));
            }
        }
        best
    }

    #[test]
    fn dominant_unit_clause_wins() {
        let net = testnet::build(
            1,
            vec![(vec![(0, true)], Weight::Soft(2.0)), (vec![(0, false)], Weight::Soft(1.0))],
        );
        let map = map_exact(&net).unwrap();
        assert_eq!(map.values, vec![true]);
        assert!((map.score - 2.0).abs() < 1e-12);
        assert!(map.hard_feasible);
    }

    #[test]
    fn empty_network_yields_empty_assignment() {
        let net = testnet::build(0, vec![]);
        let map = map_exact(&net).unwrap();
        assert!(map.values.is_empty());
        assert_eq!(map.score, 0.0);
    }

    #[test]
    fn ties_prefer_false_then_lexicographic_order() {
        let net = testnet::build(2, vec![(vec![(0, true), (1, true)], Weight::Soft(1.0))]);
        let map = map_exact(&net).unwrap();
        assert_eq!(map.values, vec![false, true]);

        let free = testnet::build(2, vec![]);
        assert_eq!(map_exact(&free).unwrap().values, vec![false, false]);
    }

    #[test]
    fn matches_brute_force_on_random_networks() {
        for seed in 0..30 {
            let net = testnet::random(10, 16, 2, seed);
            match (brute_map(&net), map_exact(&net)) {
                (None, Err(InferError::Unsatisfiable)) => {}
                (Some((world, score)), Ok(map)) => {
                    assert!((map.score - score).abs() < 1e-9, "seed {seed}");
                    assert_eq!(map.values, world, "seed {seed}");
                }
                (e, g) => panic!("seed {seed}: feasibility disagreement ({} vs {g:?})", e.is_some()),
            }
        }
    }

    #[test]
    fn hard_contradictions_are_reported() {
        let net = testnet::build(
            1,
            vec![(vec![(0, true)], Weight::Hard), (vec![(0, false)], Weight::Hard)],
        );
        assert_eq!(map_exact(&net), Err(InferError::Unsatisfiable));
    }

    #[test]
    fn oversized_components_are_rejected() {
        let lits: Vec<(usize, bool)> = (0..4).map(|i| (i, true)).collect();
        let net = testnet::build(4, vec![(lits, Weight::Soft(1.0))]);
        assert!(matches!(map_exact_with_cap(&net, 3), Err(InferError::TooLarge { atoms: 4, cap: 3 })));
    }

    #[test]
    fn local_search_reaches_the_exact_score() {
        let mut hits = 0;
        let mut total = 0;
        for seed in 0..20 {
            let net = testnet::random(9, 14, 2, seed);
            let exact = match map_exact(&net) {
                Ok(m) => m,
                Err(_) => continue,
            };
            total += 1;
            let opts = WalkOptions { flips: 2000, restarts: 8, seed, ..WalkOptions::default() };
            let walked = map_localsearch(&net, &opts).unwrap();
            assert!(walked.score <= exact.score + 1e-9);
            if walked.hard_feasible && (walked.score - exact.score).abs() < 1e-9 {
                hits += 1;
            }
        }
        assert!(total >= 15, "only {total} feasible networks");
        assert!(hits * 100 >= total * 95, "{hits}/{total} optimal");
    }

    #[test]
    fn local_search_is_deterministic_per_seed() {
        let net = testnet::random(8, 12, 1, 3);
        let opts = WalkOptions { flips: 500, restarts: 4, seed: 9, ..WalkOptions::default() };
        assert_eq!(map_localsearch(&net, &opts).unwrap(), map_localsearch(&net, &opts).unwrap());
    }

    #[test]
    fn infeasible_networks_come_back_flagged() {
        let net = testnet::build(
            1,
            vec![(vec![(0, true)], Weight::Hard), (vec![(0, false)], Weight::Hard)],
        );
        let map = map_localsearch(&net, &WalkOptions { flips: 50, restarts: 2, ..WalkOptions::default() }).unwrap();
        assert!(!map.hard_feasible);
    }

    #[test]
    fn hard_only_networks_return_their_unique_solution() {
        let net = testnet::build(
            3,
            vec![
                (vec![(0, true)], Weight::Hard),
                (vec![(0, false), (1, true)], Weight::Hard),
                (vec![(1, false), (2, false)], Weight::Hard),
            ],
        );
        let opts = WalkOptions { flips: 300, restarts: 3, seed: 1, ..WalkOptions::default() };
        let map = map_localsearch(&net, &opts).unwrap();
        assert!(map.hard_feasible);
        assert_eq!(map.values, vec![true, true, false]);
        assert_eq!(map_exact(&net).unwrap().values, map.values);
    }
}
