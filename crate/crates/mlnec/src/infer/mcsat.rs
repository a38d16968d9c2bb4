//! MC-SAT marginal inference. Each round keeps the hard clauses, retains a
//! random subset of the currently satisfied soft clauses, and draws the
//! next state near-uniformly from the assignments satisfying the retained
//! set with a noisy local search.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{IndexList, InferError, MarginalTable};
use crate::grounding::{ClauseWeight, GroundLit, GroundNetwork};

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct McSatOptions {
    pub samples: usize,
    /// Rounds discarded before recording.
    pub burn_in: usize,
    /// Probability of a random-walk move over a greedy move.
    pub walk_prob: f64,
    /// Search budget per round, as a multiple of the atom count.
    pub flips_per_atom: usize,
    pub seed: u64,
}

impl Default for McSatOptions {
    fn default() -> McSatOptions {
        McSatOptions { samples: 1000, burn_in: 100, walk_prob: 0.5, flips_per_atom: 10, seed: 0 }
    }
}

/// Sample-based estimates: marginals plus the per-formula count statistics
/// the weight learner consumes, with one row of raw counts per sample.
#[derive(Clone, PartialEq, Debug)]
pub struct SampleStats {
    pub marginals: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_var: Vec<f64>,
    pub sample_counts: Vec<Vec<f64>>,
    pub samples: usize,
    pub seed: u64,
}

pub fn mcsat_marginals(net: &GroundNetwork, samples: usize, seed: u64) -> Result<MarginalTable, InferError> {
    let stats = mcsat_stats(net, &McSatOptions { samples, seed, ..McSatOptions::default() })?;
    Ok(MarginalTable {
        atoms: net.atoms.clone(),
        probabilities: stats.marginals,
        samples: Some(samples),
        seed: Some(seed),
    })
}

pub fn mcsat_stats(net: &GroundNetwork, opts: &McSatOptions) -> Result<SampleStats, InferError> {
    let n = net.atoms.len();
    let n_soft = net.soft_weights().len();
    if net.clauses.iter().any(|c| c.lits.is_empty() && c.weight == ClauseWeight::Hard) {
        return Err(InferError::Unsatisfiable);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let hard: Vec<Vec<GroundLit>> = net
        .clauses
        .iter()
        .filter(|c| c.weight == ClauseWeight::Hard)
        .map(|c| c.lits.clone())
        .collect();
    let soft: Vec<(&Vec<GroundLit>, f64)> = net
        .clauses
        .iter()
        .filter(|c| c.weight != ClauseWeight::Hard)
        .map(|c| (&c.lits, net.clause_weight(c).expect("soft clause")))
        .collect();
    let budget = opts.flips_per_atom * n.max(1);

    let mut state = vec![false; n];
    if !satisfies(&hard, &state) {
        let mut found = false;
        // The first attempt starts from the unit-propagation fixpoint,
        // which already settles the inertia chains of all-hard programs;
        // later restarts are random with a growing budget.
        for attempt in 0..20u32 {
            let mut start: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            if attempt == 0 {
                let mut fixed = vec![false; n];
                if !propagate_units(&hard, &mut start, &mut fixed) {
                    return Err(InferError::Unsatisfiable);
                }
            }
            let tries = budget << (attempt / 4).min(4);
            if let Some(solution) = sample_sat(&hard, start, tries, opts.walk_prob, &mut rng) {
                state = solution;
                found = true;
                break;
            }
        }
        if !found {
            return Err(InferError::Unsatisfiable);
        }
    }

    let mut true_counts = vec![0usize; n];
    let mut sample_counts = Vec::with_capacity(opts.samples);
    for round in 0..opts.burn_in + opts.samples {
        let mut retained = hard.clone();
        for (lits, w) in &soft {
            let sat = lits.iter().any(|l| state[l.atom] == l.positive);
            if *w > 0.0 && sat && rng.random_bool(1.0 - (-w).exp()) {
                retained.push((*lits).clone());
            } else if *w < 0.0 && !sat && rng.random_bool(1.0 - w.exp()) {
                // keep the clause violated: force every literal false
                for l in *lits {
                    retained.push(vec![GroundLit { atom: l.atom, positive: !l.positive }]);
                }
            }
        }
        let start: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        if let Some(next) = sample_sat(&retained, start, budget, opts.walk_prob, &mut rng) {
            state = next;
        }
        if round >= opts.burn_in {
            for (i, &bit) in state.iter().enumerate() {
                if bit {
                    true_counts[i] += 1;
                }
            }
            sample_counts.push(net.feature_counts(&state));
        }
    }

    let s = opts.samples.max(1) as f64;
    let mut mean = vec![0.0; n_soft];
    let mut second = vec![0.0; n_soft];
    for counts in &sample_counts {
        for f in 0..n_soft {
            mean[f] += counts[f];
            second[f] += counts[f] * counts[f];
        }
    }
    for f in 0..n_soft {
        mean[f] /= s;
        second[f] /= s;
    }
    Ok(SampleStats {
        marginals: true_counts.iter().map(|c| *c as f64 / s).collect(),
        feature_mean: mean.clone(),
        feature_var: (0..n_soft).map(|f| (second[f] - mean[f] * mean[f]).max(0.0)).collect(),
        sample_counts,
        samples: opts.samples,
        seed: opts.seed,
    })
}

fn satisfies(constraints: &[Vec<GroundLit>], state: &[bool]) -> bool {
    constraints.iter().all(|c| c.iter().any(|l| state[l.atom] == l.positive))
}

/// Walks `budget` flips over the constraint set and returns the last
/// satisfying assignment seen, if any. Unsatisfied constraints are
/// Iterated unit resolution: assigns every atom forced by the constraints
/// given the assignments so far and marks it fixed, leaving the rest
/// untouched. Returns false when a constraint has no literal left, which
/// proves the set unsatisfiable.
fn propagate_units(constraints: &[Vec<GroundLit>], state: &mut [bool], fixed: &mut [bool]) -> bool {
    loop {
        let mut changed = false;
        for lits in constraints {
            let mut open = None;
            let mut open_count = 0;
            let mut satisfied = false;
            for l in lits {
                if fixed[l.atom] {
                    if state[l.atom] == l.positive {
                        satisfied = true;
                        break;
                    }
                } else {
                    open_count += 1;
                    open = Some(l);
                }
            }
            if satisfied {
                continue;
            }
            match (open_count, open) {
                (0, _) => return false,
                (1, Some(l)) => {
                    state[l.atom] = l.positive;
                    fixed[l.atom] = true;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return true;
        }
    }
}

/// repaired with noisy greedy moves; once everything holds, uniformly
/// proposed flips are accepted only while they keep the state satisfying,
/// which walks near-uniformly over the reachable satisfying cluster.
fn sample_sat(
    constraints: &[Vec<GroundLit>],
    mut state: Vec<bool>,
    budget: usize,
    walk_prob: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<bool>> {
    // acceptance temperature for cluster-leaving proposals
    const TEMP: f64 = 0.1;
    let n = state.len();
    if n == 0 {
        // without atoms only an empty constraint set is satisfiable
        return constraints.is_empty().then_some(state);
    }
    let mut occurrences: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    let mut sat = vec![0u32; constraints.len()];
    let mut unsat = IndexList::new(constraints.len());
    for (ci, lits) in constraints.iter().enumerate() {
        for l in lits {
            occurrences[l.atom].push((ci, l.positive));
            if state[l.atom] == l.positive {
                sat[ci] += 1;
            }
        }
        if sat[ci] == 0 {
            unsat.insert(ci);
        }
    }
    let break_count = |state: &[bool], sat: &[u32], atom: usize| {
        occurrences[atom]
            .iter()
            .filter(|(ci, pos)| state[atom] == *pos && sat[*ci] == 1)
            .count()
    };

    for _ in 0..budget {
        let atom = if unsat.is_empty() {
            let proposal = rng.random_range(0..n);
            let breaks = break_count(&state, &sat, proposal);
            if breaks > 0 && !rng.random_bool((-(breaks as f64) / TEMP).exp()) {
                continue;
            }
            proposal
        } else {
            let lits = &constraints[unsat.get(rng.random_range(0..unsat.len()))];
            if rng.random_bool(walk_prob) {
                lits[rng.random_range(0..lits.len())].atom
            } else {
                let mut best = (usize::MAX, 0);
                for l in lits {
                    let breaks = break_count(&state, &sat, l.atom);
                    if breaks < best.0 {
                        best = (breaks, l.atom);
                    }
                }
                best.1
            }
        };
        for &(ci, positive) in &occurrences[atom] {
            let was = sat[ci] > 0;
            if state[atom] == positive {
                sat[ci] -= 1;
            } else {
                sat[ci] += 1;
            }
            let now = sat[ci] > 0;
            if was && !now {
                unsat.insert(ci);
            } else if !was && now {
                unsat.remove(ci);
            }
        }
        state[atom] = !state[atom];
    }
    unsat.is_empty().then_some(state)
}
