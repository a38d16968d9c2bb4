//! Exact inference by exhaustive enumeration, factored over connected
//! components. Worlds are visited in Gray-code order so each step updates
//! only the clauses touching one flipped atom.

use rayon::prelude::*;

use super::{components, Component, InferError, MarginalTable};
use crate::grounding::{ClauseWeight, GroundNetwork};

/// Default bound on the atom count of any single connected component.
pub const EXACT_CAP: usize = 20;

/// Everything the exact engine knows about the conditional distribution:
/// the log partition function, per-atom marginals, and the mean and
/// variance of each soft formula's satisfied-grounding count.
#[derive(Clone, PartialEq, Debug)]
pub struct Posterior {
    pub log_z: f64,
    pub marginals: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_var: Vec<f64>,
}

pub fn exact_marginals(net: &GroundNetwork) -> Result<MarginalTable, InferError> {
    exact_marginals_with_cap(net, EXACT_CAP)
}

pub fn exact_marginals_with_cap(net: &GroundNetwork, cap: usize) -> Result<MarginalTable, InferError> {
    let post = posterior(net, cap)?;
    Ok(MarginalTable { atoms: net.atoms.clone(), probabilities: post.marginals, samples: None, seed: None })
}

pub fn posterior(net: &GroundNetwork, cap: usize) -> Result<Posterior, InferError> {
    if net.clauses.iter().any(|c| c.lits.is_empty() && c.weight == ClauseWeight::Hard) {
        return Err(InferError::Unsatisfiable);
    }
    let comps = components(net);
    if let Some(c) = comps.iter().find(|c| c.atoms.len() > cap) {
        return Err(InferError::TooLarge { atoms: c.atoms.len(), cap });
    }
    let soft_index = net.soft_index();
    let n_soft = net.soft_weights().len();
    let sums: Vec<ComponentSum> = comps
        .par_iter()
        .map(|c| enumerate(net, c, &soft_index, n_soft))
        .collect::<Result<_, _>>()?;

    let mut post = Posterior {
        log_z: 0.0,
        marginals: vec![0.0; net.atoms.len()],
        feature_mean: vec![0.0; n_soft],
        feature_var: vec![0.0; n_soft],
    };
    for (comp, sum) in comps.iter().zip(&sums) {
        post.log_z += sum.log_z;
        for (atom, m) in comp.atoms.iter().zip(&sum.marginals) {
            post.marginals[*atom] = *m;
        }
        for f in 0..n_soft {
            post.feature_mean[f] += sum.mean[f];
            post.feature_var[f] += (sum.second[f] - sum.mean[f] * sum.mean[f]).max(0.0);
        }
    }
    Ok(post)
}

struct ComponentSum {
    log_z: f64,
    marginals: Vec<f64>,
    mean: Vec<f64>,
    second: Vec<f64>,
}

/// Per-clause structure localised to one component.
struct Tableau {
    /// For each local atom, the clauses it appears in and its polarity.
    occurrences: Vec<Vec<(usize, bool)>>,
    /// Satisfying-literal count of each clause in the all-false world.
    initial_sat: Vec<u32>,
    /// Effective weight, `None` for hard clauses.
    weights: Vec<Option<f64>>,
    /// Coefficient and soft-formula position of each soft clause.
    features: Vec<Option<(f64, usize)>>,
}

fn enumerate(
    net: &GroundNetwork,
    comp: &Component,
    soft_index: &[usize],
    n_soft: usize,
) -> Result<ComponentSum, InferError> {
    let k = comp.atoms.len();
    let local: std::collections::BTreeMap<usize, usize> =
        comp.atoms.iter().enumerate().map(|(i, a)| (*a, i)).collect();

    let mut tab = Tableau {
        occurrences: vec![Vec::new(); k],
        initial_sat: Vec::with_capacity(comp.clauses.len()),
        weights: Vec::with_capacity(comp.clauses.len()),
        features: Vec::with_capacity(comp.clauses.len()),
    };
    for (ci, &gi) in comp.clauses.iter().enumerate() {
        let clause = &net.clauses[gi];
        tab.initial_sat.push(clause.lits.iter().filter(|l| !l.positive).count() as u32);
        tab.weights.push(net.clause_weight(clause));
        tab.features.push(match clause.weight {
            ClauseWeight::Hard => None,
            ClauseWeight::Soft { coeff } => Some((coeff, soft_index[clause.origin])),
        });
        for lit in &clause.lits {
            tab.occurrences[local[&lit.atom]].push((ci, lit.positive));
        }
    }

    // first pass: the feasible maximum, for a stable exponent shift
    let mut max_score = f64::NEG_INFINITY;
    walk(&tab, k, n_soft, &mut |_, score, _, feasible| {
        if feasible && score > max_score {
            max_score = score;
        }
    });
    if max_score == f64::NEG_INFINITY {
        return Err(InferError::Unsatisfiable);
    }

    let mut z = 0.0;
    let mut marginals = vec![0.0; k];
    let mut mean = vec![0.0; n_soft];
    let mut second = vec![0.0; n_soft];
    walk(&tab, k, n_soft, &mut |assign, score, counts, feasible| {
        if !feasible {
            return;
        }
        let mass = (score - max_score).exp();
        z += mass;
        for (i, &bit) in assign.iter().enumerate() {
            if bit {
                marginals[i] += mass;
            }
        }
        for f in 0..n_soft {
            mean[f] += counts[f] * mass;
            second[f] += counts[f] * counts[f] * mass;
        }
    });

    for m in &mut marginals {
        *m /= z;
    }
    for f in 0..n_soft {
        mean[f] /= z;
        second[f] /= z;
    }
    Ok(ComponentSum { log_z: max_score + z.ln(), marginals, mean, second })
}

/// Visits all 2^k worlds, passing the assignment, its soft score, its
/// per-formula satisfied counts, and whether every hard clause holds.
fn walk(tab: &Tableau, k: usize, n_soft: usize, visit: &mut dyn FnMut(&[bool], f64, &[f64], bool)) {
    let mut assign = vec![false; k];
    let mut sat = tab.initial_sat.clone();
    let mut violated_hard = 0usize;
    let mut score = 0.0;
    let mut counts = vec![0.0; n_soft];
    for (ci, &s) in sat.iter().enumerate() {
        match (s > 0, tab.weights[ci]) {
            (false, None) => violated_hard += 1,
            (true, Some(w)) => {
                score += w;
                let (coeff, f) = tab.features[ci].expect("weighted clauses carry features");
                counts[f] += coeff;
            }
            _ => {}
        }
    }
    visit(&assign, score, &counts, violated_hard == 0);

    for step in 1..(1u64 << k) {
        let flipped = step.trailing_zeros() as usize;
        for &(ci, positive) in &tab.occurrences[flipped] {
            let was = sat[ci] > 0;
            if assign[flipped] == positive {
                sat[ci] -= 1;
            } else {
                sat[ci] += 1;
            }
            let now = sat[ci] > 0;
            if was == now {
                continue;
            }
            match tab.weights[ci] {
                None => {
                    if now {
                        violated_hard -= 1;
                    } else {
                        violated_hard += 1;
                    }
                }
                Some(w) => {
                    let (coeff, f) = tab.features[ci].expect("weighted clauses carry features");
                    if now {
                        score += w;
                        counts[f] += coeff;
                    } else {
                        score -= w;
                        counts[f] -= coeff;
                    }
                }
            }
        }
        assign[flipped] = !assign[flipped];
        visit(&assign, score, &counts, violated_hard == 0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::testnet;
    use crate::logic::Weight;

    /// Full enumeration straight off the network methods.
    fn brute(net: &GroundNetwork) -> Option<Posterior> {
        let n = net.atoms.len();
        let n_soft = net.soft_weights().len();
        let worlds: Vec<(Vec<bool>, f64, Vec<f64>)> = (0u32..1 << n)
            .map(|pattern| {
                let world: Vec<bool> = (0..n).map(|i| pattern >> i & 1 == 1).collect();
                let score = net.world_score(&world);
                let counts = net.feature_counts(&world);
                (world, score, counts)
            })
            .filter(|(world, _, _)| net.hard_ok(world))
            .collect();
        let max = worlds.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return None;
        }
        let mut z = 0.0;
        let mut marginals = vec![0.0; n];
        let mut mean = vec![0.0; n_soft];
        let mut second = vec![0.0; n_soft];
        for (world, score, counts) in &worlds {
            let mass = (score - max).exp();
            z += mass;
            for (i, &bit) in world.iter().enumerate() {
                if bit {
                    marginals[i] += mass;
                }
            }
            for f in 0..n_soft {
                mean[f] += counts[f] * mass;
                second[f] += counts[f] * counts[f] * mass;
            }
        }
        Some(Posterior {
            log_z: max + z.ln(),
            marginals: marginals.iter().map(|m| m / z).collect(),
            feature_mean: mean.iter().map(|m| m / z).collect(),
            feature_var: (0..n_soft).map(|f| second[f] / z - (mean[f] / z).powi(2)).collect(),
        })
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn unit_clause_marginals_match_the_logistic_form() {
        let net = testnet::build(1, vec![(vec![(0, true)], Weight::Soft(0.0))]);
        assert_eq!(exact_marginals(&net).unwrap().probabilities, vec![0.5]);

        let net = testnet::build(1, vec![(vec![(0, true)], Weight::Soft(3f64.ln()))]);
        let p = exact_marginals(&net).unwrap().probabilities[0];
        assert!((p - 0.75).abs() < 1e-12);

        let net = testnet::build(1, vec![(vec![(0, true)], Weight::Hard)]);
        assert_eq!(exact_marginals(&net).unwrap().probabilities, vec![1.0]);
    }

    #[test]
    fn matches_brute_force_on_random_networks() {
        let mut feasible = 0;
        for seed in 0..12 {
            let net = testnet::random(9, 14, 2, seed);
            let expected = brute(&net);
            let got = posterior(&net, EXACT_CAP);
            match (expected, got) {
                (None, Err(InferError::Unsatisfiable)) => {}
                (Some(e), Ok(g)) => {
                    feasible += 1;
                    assert!((e.log_z - g.log_z).abs() < 1e-9, "seed {seed}");
                    close(&e.marginals, &g.marginals, 1e-9);
                    close(&e.feature_mean, &g.feature_mean, 1e-9);
                    close(&e.feature_var, &g.feature_var, 1e-9);
                }
                (e, g) => panic!("seed {seed}: feasibility disagreement ({} vs {g:?})", e.is_some()),
            }
        }
        assert!(feasible >= 8, "only {feasible} feasible networks");
    }

    #[test]
    fn factorisation_handles_disconnected_networks() {
        let net = testnet::build(
            3,
            vec![
                (vec![(0, true)], Weight::Soft(3f64.ln())),
                (vec![(2, false)], Weight::Soft(1.2)),
            ],
        );
        let post = posterior(&net, EXACT_CAP).unwrap();
        let expected = brute(&net).unwrap();
        assert!((post.log_z - expected.log_z).abs() < 1e-12);
        close(&post.marginals, &expected.marginals, 1e-12);
        assert!((post.marginals[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn probabilities_stay_in_the_unit_interval() {
        for seed in 0..4 {
            let net = testnet::random(8, 12, 1, seed);
            if let Ok(table) = exact_marginals(&net) {
                for p in table.probabilities {
                    assert!((0.0..=1.0).contains(&p));
                }
            }
        }
    }

    #[test]
    fn oversized_components_are_rejected() {
        let lits: Vec<(usize, bool)> = (0..3).map(|i| (i, true)).collect();
        let net = testnet::build(3, vec![(lits, Weight::Soft(0.5))]);
        assert_eq!(
            posterior(&net, 2),
            Err(InferError::TooLarge { atoms: 3, cap: 2 })
        );
        assert!(posterior(&net, 3).is_ok());
    }

    #[test]
    fn contradictory_hard_clauses_are_reported() {
        let net = testnet::build(
            1,
            vec![(vec![(0, true)], Weight::Hard), (vec![(0, false)], Weight::Hard)],
        );
        assert_eq!(posterior(&net, EXACT_CAP), Err(InferError::Unsatisfiable));
    }

    #[test]
    fn empty_network_has_unit_partition_function() {
        let net = testnet::build(0, vec![]);
        let post = posterior(&net, EXACT_CAP).unwrap();
        assert_eq!(post.log_z, 0.0);
        assert!(post.marginals.is_empty());
    }
}
