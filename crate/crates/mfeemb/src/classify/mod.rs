//! Classifiers over embedded dialogues plus shared evaluation metrics.

mod centroid;
mod logreg;
mod svm;

pub use centroid::{classify_centroid, fit_centroids, CentroidModel};
pub use logreg::{
    cv_select_lambda, logreg_loss_grad, predict_logreg, predict_proba, train_logreg, LogRegModel,
    LogRegParams,
};
pub use svm::{
    dual_objective, kkt_max_violation, predict_svm, rbf_kernel, resolve_gamma, svm_decision,
    train_svm_smo, Gamma, SvmModel, SvmParams,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::ConflictLabel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Precision/recall/F1 per class plus the support-weighted F1 and the raw
/// confusion counts. Metric denominators of zero yield 0 by convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: BTreeMap<String, ClassMetrics>,
    pub weighted_f1: f64,
    pub accuracy: f64,
    /// `confusion[gold][pred]` with class order `[low, high]`.
    pub confusion: [[usize; 2]; 2],
}

impl EvalReport {
    pub fn f1(&self, label: ConflictLabel) -> f64 {
        self.per_class[label.as_str()].f1
    }
}

/// Compares predictions to gold labels. Inputs must be equal-length and
/// non-empty.
pub fn evaluate(pred: &[ConflictLabel], gold: &[ConflictLabel]) -> Result<EvalReport> {
    if pred.len() != gold.len() {
        return Err(Error::Usage(format!(
            "{} predictions for {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Data("nothing to evaluate".into()));
    }
    let idx = |l: ConflictLabel| match l {
        ConflictLabel::LowConflict => 0usize,
        ConflictLabel::HighConflict => 1usize,
    };
    let mut confusion = [[0usize; 2]; 2];
    for (&p, &g) in pred.iter().zip(gold) {
        confusion[idx(g)][idx(p)] += 1;
    }
    let mut per_class = BTreeMap::new();
    let mut weighted = 0.0;
    for label in ConflictLabel::ALL {
        let c = idx(label);
        let tp = confusion[c][c];
        let fp = confusion[1 - c][c];
        let fn_ = confusion[c][1 - c];
        let support = tp + fn_;
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        weighted += f1 * support as f64;
        per_class.insert(
            label.as_str().to_string(),
            ClassMetrics { precision, recall, f1, support },
        );
    }
    let accuracy = (confusion[0][0] + confusion[1][1]) as f64 / pred.len() as f64;
    Ok(EvalReport {
        per_class,
        weighted_f1: weighted / pred.len() as f64,
        accuracy,
        confusion,
    })
}
