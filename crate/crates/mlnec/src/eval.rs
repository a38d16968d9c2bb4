//! Recognition and scoring: run inference over a narrative, turn the
//! output into per-time decisions, and compare decisions or probability
//! series against a ground-truth annotation.
//!
//! Every `(fluent instance, time-point)` pair is one example, so counts
//! micro-aggregate across fluents, entity orderings and narratives alike.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::compile::CompiledKb;
use crate::grounding::{ground, GroundError};
use crate::infer::{
    exact_marginals_with_cap, fluent_time, map_exact_with_cap, map_localsearch, mcsat_stats, InferError,
    MarginalTable, McSatOptions, WalkOptions,
};
use crate::kb::{Annotation, Narrative};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EvalError {
    #[error("decisions cover times 0..={decisions} but the annotation declares 0..={annotation}")]
    HorizonMismatch { decisions: u32, annotation: u32 },
    #[error("the precision-recall area is undefined without a positive example")]
    NoPositives,
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Infer(#[from] InferError),
}

/// Micro-averaged confusion counts with the derived rates. Empty
/// denominators yield 0 rather than an error.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct MetricsReport {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub true_negatives: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Only present when a probability series was scored.
    pub auprc: Option<f64>,
    pub threshold: f64,
}

impl MetricsReport {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64, threshold: f64) -> MetricsReport {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        MetricsReport {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: tn,
            precision,
            recall,
            f1,
            auprc: None,
            threshold,
        }
    }

    /// Pools several reports by summing their counts.
    pub fn micro<'a>(reports: impl IntoIterator<Item = &'a MetricsReport>) -> MetricsReport {
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        let mut tn = 0;
        let mut threshold = 0.0;
        for (i, r) in reports.into_iter().enumerate() {
            tp += r.true_positives;
            fp += r.false_positives;
            fn_ += r.false_negatives;
            tn += r.true_negatives;
            if i == 0 {
                threshold = r.threshold;
            }
        }
        MetricsReport::from_counts(tp, fp, fn_, tn, threshold)
    }
}

/// Per-time truth decisions for every fluent instance of a narrative.
#[derive(Clone, PartialEq, Debug)]
pub struct Decisions {
    pub horizon: u32,
    pub threshold: f64,
    pub rows: Vec<(String, u32, bool)>,
}

/// Output of a recognition run.
#[derive(Clone, PartialEq, Debug)]
pub struct Recognition {
    pub decisions: Decisions,
    /// The probability series behind the decisions, marginal modes only.
    pub probabilities: Option<Vec<(String, u32, f64)>>,
    /// False when local search gave up without satisfying the hard clauses.
    pub hard_feasible: bool,
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum RecognizeMode {
    MarginalExact { cap: usize },
    MarginalSampled(McSatOptions),
    MapExact { cap: usize },
    MapLocalSearch(WalkOptions),
}

/// Grounds the narrative and recognises fluents: marginal modes declare a
/// fluent at `t` whenever its probability reaches the threshold, MAP modes
/// use the assignment's truth values directly.
pub fn recognize(
    ckb: &CompiledKb,
    narrative: &Narrative,
    mode: &RecognizeMode,
    threshold: f64,
) -> Result<Recognition, EvalError> {
    let net = ground(ckb, narrative)?;
    let (prob_rows, truth_rows, hard_feasible) = match mode {
        RecognizeMode::MarginalExact { cap } => {
            let table = exact_marginals_with_cap(&net, *cap)?;
            (Some(table.rows(&narrative.clamped)), None, true)
        }
        RecognizeMode::MarginalSampled(opts) => {
            let stats = mcsat_stats(&net, opts)?;
            let table = MarginalTable {
                atoms: net.atoms.clone(),
                probabilities: stats.marginals,
                samples: Some(stats.samples),
                seed: Some(stats.seed),
            };
            (Some(table.rows(&narrative.clamped)), None, true)
        }
        RecognizeMode::MapExact { cap } => {
            let map = map_exact_with_cap(&net, *cap)?;
            (None, Some(map.rows(&narrative.clamped)), map.hard_feasible)
        }
        RecognizeMode::MapLocalSearch(opts) => {
            let map = map_localsearch(&net, opts)?;
            (None, Some(map.rows(&narrative.clamped)), map.hard_feasible)
        }
    };

    let mut rows = match (&prob_rows, truth_rows) {
        (Some(probs), _) => probs.iter().map(|(f, t, p)| (f.clone(), *t, *p >= threshold)).collect(),
        (None, Some(rows)) => rows,
        (None, None) => unreachable!("every mode fills one side"),
    };
    rows.sort();
    let probabilities = prob_rows.map(|mut rows| {
        rows.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
        rows
    });
    Ok(Recognition {
        decisions: Decisions { horizon: narrative.horizon, threshold, rows },
        probabilities,
        hard_feasible,
    })
}

fn annotation_keys(annotation: &Annotation) -> BTreeSet<(String, u32)> {
    annotation
        .positives
        .iter()
        .map(|atom| {
            let (fluent, time) = fluent_time(atom);
            (fluent, time)
        })
        .collect()
}

/// Confusion counts of decisions against an annotation. Annotated
/// positives the decisions never mention count as false negatives.
pub fn metrics(decisions: &Decisions, annotation: &Annotation) -> Result<MetricsReport, EvalError> {
    if let Some(h) = annotation.horizon {
        if h != decisions.horizon {
            return Err(EvalError::HorizonMismatch { decisions: decisions.horizon, annotation: h });
        }
    }
    let positives = annotation_keys(annotation);
    let mut covered = BTreeSet::new();
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (fluent, time, decided) in &decisions.rows {
        let actual = positives.contains(&(fluent.clone(), *time));
        if actual {
            covered.insert((fluent.clone(), *time));
        }
        match (*decided, actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    fn_ += (positives.len() - covered.len()) as u64;
    Ok(MetricsReport::from_counts(tp, fp, fn_, tn, decisions.threshold))
}

/// Pairs each probability row with its annotated label. Annotated
/// positives missing from the rows enter with probability 0.
pub fn labeled_scores(rows: &[(String, u32, f64)], annotation: &Annotation) -> Vec<(f64, bool)> {
    let positives = annotation_keys(annotation);
    let mut covered = BTreeSet::new();
    let mut scores: Vec<(f64, bool)> = rows
        .iter()
        .map(|(fluent, time, p)| {
            let key = (fluent.clone(), *time);
            let positive = positives.contains(&key);
            if positive {
                covered.insert(key);
            }
            (*p, positive)
        })
        .collect();
    scores.extend(positives.difference(&covered).map(|_| (0.0, true)));
    scores
}

/// Area under the precision-recall curve with step interpolation: sweeping
/// the threshold down through the distinct scores, each recall increment
/// contributes at the precision reached there.
pub fn auprc(scores: &[(f64, bool)]) -> Result<f64, EvalError> {
    let total_positives = scores.iter().filter(|(_, label)| *label).count();
    if total_positives == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut area = 0.0;
    let mut tp = 0usize;
    let mut predicted = 0usize;
    let mut last_recall = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // take every example tied at this score in one step
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            predicted += 1;
            if sorted[i].1 {
                tp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / total_positives as f64;
        let precision = tp as f64 / predicted as f64;
        area += (recall - last_recall) * precision;
        last_recall = recall;
    }
    Ok(area)
}

/// Scores a probability series against an annotation.
pub fn auprc_rows(rows: &[(String, u32, f64)], annotation: &Annotation) -> Result<f64, EvalError> {
    auprc(&labeled_scores(rows, annotation))
}

/// Confusion reports at 101 evenly spaced thresholds on `[0, 1]`.
pub fn threshold_sweep(scores: &[(f64, bool)]) -> Vec<MetricsReport> {
    (0..=100)
        .map(|i| {
            let threshold = i as f64 / 100.0;
            let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
            for (score, label) in scores {
                match (*score >= threshold, *label) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
            MetricsReport::from_counts(tp, fp, fn_, tn, threshold)
        })
        .collect()
}
