//! Discriminative weight learning from annotated narratives: negative
//! conditional log-likelihood gradients, damped diagonal Newton updates
//! with a backtracking step size, and an averaged MAP-driven perceptron.

use rayon::prelude::*;
use thiserror::Error;

use crate::grounding::{ClauseWeight, GroundClause, GroundError, GroundNetwork};
use crate::infer::{
    map_exact_with_cap, map_localsearch, mcsat_stats, posterior, InferError, McSatOptions, WalkOptions,
};
use crate::kb::Annotation;
use crate::logic::Atom;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LearnError {
    #[error("the annotated state violates `{label}`: {clause}")]
    InfeasibleObservation { label: String, clause: String },
    #[error("weight update for `{label}` is not finite")]
    NonFinite { label: String },
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error(transparent)]
    Ground(#[from] GroundError),
}

/// One narrative's network together with the annotated truth values of its
/// query atoms and the satisfied-grounding counts at that state.
#[derive(Clone, PartialEq, Debug)]
pub struct TrainingInstance {
    pub network: GroundNetwork,
    pub observed: Vec<bool>,
    pub counts_observed: Vec<f64>,
}

impl TrainingInstance {
    pub fn new(network: GroundNetwork, annotation: &Annotation) -> Result<TrainingInstance, LearnError> {
        let observed = network.atoms.iter().map(|a| annotation.positives.contains(a)).collect();
        TrainingInstance::from_assignment(network, observed)
    }

    /// Rejects assignments that violate a hard clause, naming the rule.
    pub fn from_assignment(network: GroundNetwork, observed: Vec<bool>) -> Result<TrainingInstance, LearnError> {
        if let Some(clause) = network
            .clauses
            .iter()
            .find(|c| c.weight == ClauseWeight::Hard && !c.is_satisfied(&observed))
        {
            return Err(LearnError::InfeasibleObservation {
                label: network.formulas[clause.origin].label.clone(),
                clause: render(clause, &network.atoms),
            });
        }
        let counts_observed = network.feature_counts(&observed);
        Ok(TrainingInstance { network, observed, counts_observed })
    }
}

fn render(clause: &GroundClause, atoms: &[Atom]) -> String {
    let lits: Vec<String> = clause
        .lits
        .iter()
        .map(|l| format!("{}{}", if l.positive { "" } else { "!" }, atoms[l.atom]))
        .collect();
    lits.join(" | ")
}

/// How feature expectations and variances are estimated.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Inference {
    Exact { cap: usize },
    McSat(McSatOptions),
}

/// Per-instance estimates at the current weights.
struct Stats {
    mean: Vec<f64>,
    var: Vec<f64>,
    /// Exact mode only.
    log_z: Option<f64>,
    /// MC-SAT mode only: raw counts per retained sample, reused to score
    /// candidate weights by importance reweighting.
    sample_counts: Option<Vec<Vec<f64>>>,
}

fn stats(net: &GroundNetwork, mode: &Inference, salt: u64) -> Result<Stats, LearnError> {
    match mode {
        Inference::Exact { cap } => {
            let post = posterior(net, *cap)?;
            Ok(Stats {
                mean: post.feature_mean,
                var: post.feature_var,
                log_z: Some(post.log_z),
                sample_counts: None,
            })
        }
        Inference::McSat(opts) => {
            let opts = McSatOptions {
                seed: opts.seed.wrapping_add(salt.wrapping_mul(0x9E3779B97F4A7C15)),
                ..*opts
            };
            let s = mcsat_stats(net, &opts)?;
            Ok(Stats {
                mean: s.feature_mean,
                var: s.feature_var,
                log_z: None,
                sample_counts: Some(s.sample_counts),
            })
        }
    }
}

fn batch_stats(
    instances: &mut [TrainingInstance],
    w: &[f64],
    mode: &Inference,
) -> Result<Vec<Stats>, LearnError> {
    instances
        .par_iter_mut()
        .enumerate()
        .map(|(i, inst)| {
            inst.network.set_weights(w)?;
            stats(&inst.network, mode, i as u64)
        })
        .collect()
}

/// Gradient of one instance's negative conditional log-likelihood:
/// expected counts minus observed counts, per soft formula.
pub fn cll_gradient(
    instance: &mut TrainingInstance,
    w: &[f64],
    mode: &Inference,
) -> Result<Vec<f64>, LearnError> {
    instance.network.set_weights(w)?;
    let s = stats(&instance.network, mode, 0)?;
    Ok(s.mean.iter().zip(&instance.counts_observed).map(|(e, o)| e - o).collect())
}

/// Summed gradient over a batch.
pub fn batch_gradient(
    instances: &mut [TrainingInstance],
    w: &[f64],
    mode: &Inference,
) -> Result<Vec<f64>, LearnError> {
    let all = batch_stats(instances, w, mode)?;
    let mut grad = vec![0.0; w.len()];
    for (s, inst) in all.iter().zip(instances.iter()) {
        for i in 0..grad.len() {
            grad[i] += s.mean[i] - inst.counts_observed[i];
        }
    }
    Ok(grad)
}

/// Exact negative conditional log-likelihood of the batch.
pub fn negative_cll(instances: &mut [TrainingInstance], w: &[f64], cap: usize) -> Result<f64, LearnError> {
    instances
        .par_iter_mut()
        .map(|inst| {
            inst.network.set_weights(w)?;
            let post = posterior(&inst.network, cap)?;
            let dot: f64 = w.iter().zip(&inst.counts_observed).map(|(wi, c)| wi * c).sum();
            Ok(post.log_z - dot)
        })
        .sum()
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct NewtonOptions {
    /// Added to every estimated count variance.
    pub damping: f64,
    /// Initial step scale, halved while the objective worsens.
    pub step: f64,
    pub backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> NewtonOptions {
        NewtonOptions { damping: 1.0, step: 1.0, backtracks: 20 }
    }
}

/// One damped diagonal Newton update over the batch. The step is accepted
/// only when it does not worsen the objective, so training is monotone;
/// if no tried scale helps, the weights come back unchanged.
pub fn diagonal_newton_epoch(
    instances: &mut [TrainingInstance],
    w: &[f64],
    mode: &Inference,
    opts: &NewtonOptions,
) -> Result<Vec<f64>, LearnError> {
    let all = batch_stats(instances, w, mode)?;
    let mut grad = vec![0.0; w.len()];
    let mut hess = vec![0.0; w.len()];
    for (s, inst) in all.iter().zip(instances.iter()) {
        for i in 0..w.len() {
            grad[i] += s.mean[i] - inst.counts_observed[i];
            hess[i] += s.var[i];
        }
    }

    let mut alpha = opts.step;
    for _ in 0..=opts.backtracks {
        let candidate: Vec<f64> = (0..w.len())
            .map(|i| w[i] - alpha * grad[i] / (hess[i] + opts.damping))
            .collect();
        if let Some(i) = candidate.iter().position(|x| !x.is_finite()) {
            return Err(LearnError::NonFinite { label: soft_labels(&instances[0].network)[i].clone() });
        }
        if relative_negcll(instances, &all, w, &candidate, mode)? <= 1e-12 {
            return Ok(candidate);
        }
        alpha /= 2.0;
    }
    Ok(w.to_vec())
}

/// Negative CLL of `candidate` minus that of `w`, exactly in exact mode
/// and by importance reweighting of the epoch's samples in MC-SAT mode.
fn relative_negcll(
    instances: &mut [TrainingInstance],
    all: &[Stats],
    w: &[f64],
    candidate: &[f64],
    mode: &Inference,
) -> Result<f64, LearnError> {
    let shift: Vec<f64> = candidate.iter().zip(w).map(|(c, w)| c - w).collect();
    match mode {
        Inference::Exact { cap } => instances
            .par_iter_mut()
            .zip(all.par_iter())
            .map(|(inst, s)| {
                inst.network.set_weights(candidate)?;
                let post = posterior(&inst.network, *cap)?;
                let dot: f64 = shift.iter().zip(&inst.counts_observed).map(|(d, c)| d * c).sum();
                Ok(post.log_z - s.log_z.expect("exact stats carry log Z") - dot)
            })
            .sum(),
        Inference::McSat(_) => {
            let mut delta = 0.0;
            for (inst, s) in instances.iter().zip(all) {
                let samples = s.sample_counts.as_ref().expect("sampled stats carry counts");
                let moved: Vec<f64> = samples
                    .iter()
                    .map(|counts| shift.iter().zip(counts).map(|(d, c)| d * c).sum())
                    .collect();
                let max = moved.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let lse = max + (moved.iter().map(|m| (m - max).exp()).sum::<f64>() / moved.len() as f64).ln();
                let dot: f64 = shift.iter().zip(&inst.counts_observed).map(|(d, c)| d * c).sum();
                delta += lse - dot;
            }
            Ok(delta)
        }
    }
}

fn soft_labels(net: &GroundNetwork) -> Vec<String> {
    net.formulas
        .iter()
        .filter(|f| !f.weight.is_hard())
        .map(|f| f.label.clone())
        .collect()
}

pub fn train_newton(
    instances: &mut [TrainingInstance],
    w0: &[f64],
    epochs: usize,
    mode: &Inference,
    opts: &NewtonOptions,
) -> Result<Vec<f64>, LearnError> {
    let mut w = w0.to_vec();
    for _ in 0..epochs {
        w = diagonal_newton_epoch(instances, &w, mode, opts)?;
    }
    Ok(w)
}

/// MAP solver used inside the perceptron.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum MapMode {
    Exact { cap: usize },
    LocalSearch(WalkOptions),
}

fn map_counts(net: &GroundNetwork, mode: &MapMode, salt: u64) -> Result<Vec<f64>, LearnError> {
    let assignment = match mode {
        MapMode::Exact { cap } => map_exact_with_cap(net, *cap)?,
        MapMode::LocalSearch(opts) => {
            let opts = WalkOptions { seed: opts.seed.wrapping_add(salt.wrapping_mul(0x9E3779B97F4A7C15)), ..*opts };
            map_localsearch(net, &opts)?
        }
    };
    Ok(net.feature_counts(&assignment.values))
}

/// Raw weights after an epoch plus the running average over its updates.
#[derive(Clone, PartialEq, Debug)]
pub struct PerceptronEpoch {
    pub current: Vec<f64>,
    pub averaged: Vec<f64>,
}

fn perceptron_pass(
    instances: &mut [TrainingInstance],
    w: &mut [f64],
    rate: f64,
    mode: &MapMode,
    sum: &mut [f64],
    updates: &mut usize,
) -> Result<(), LearnError> {
    for (i, inst) in instances.iter_mut().enumerate() {
        inst.network.set_weights(w)?;
        let map = map_counts(&inst.network, mode, i as u64)?;
        for f in 0..w.len() {
            w[f] += rate * (inst.counts_observed[f] - map[f]);
            sum[f] += w[f];
        }
        *updates += 1;
    }
    Ok(())
}

/// One pass over the batch, updating after each instance by the count
/// difference between the annotated state and the current MAP state.
pub fn perceptron_epoch(
    instances: &mut [TrainingInstance],
    w: &[f64],
    rate: f64,
    mode: &MapMode,
) -> Result<PerceptronEpoch, LearnError> {
    let mut current = w.to_vec();
    let mut sum = vec![0.0; w.len()];
    let mut updates = 0;
    perceptron_pass(instances, &mut current, rate, mode, &mut sum, &mut updates)?;
    let averaged = if updates == 0 {
        current.clone()
    } else {
        sum.iter().map(|s| s / updates as f64).collect()
    };
    Ok(PerceptronEpoch { current, averaged })
}

/// Runs the perceptron for several epochs and returns the average of the
/// weight vector over every update made.
pub fn train_perceptron(
    instances: &mut [TrainingInstance],
    w0: &[f64],
    epochs: usize,
    rate: f64,
    mode: &MapMode,
) -> Result<Vec<f64>, LearnError> {
    let mut w = w0.to_vec();
    let mut sum = vec![0.0; w.len()];
    let mut updates = 0;
    for _ in 0..epochs {
        perceptron_pass(instances, &mut w, rate, mode, &mut sum, &mut updates)?;
    }
    if updates == 0 {
        return Ok(w);
    }
    Ok(sum.iter().map(|s| s / updates as f64).collect())
}
