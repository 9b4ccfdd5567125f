//! Status classifiers and their evaluation.
//!
//! The main model is a second-order gradient-boosted ensemble of regression
//! trees with a logistic link ([`boost`]). [`logreg`] provides the
//! L2-regularized logistic baseline, [`metrics`] the AUC and thresholded
//! precision/recall, and [`cv`] stratified k-fold evaluation, including
//! dimension-isolated ablations.

pub mod boost;
pub mod cv;
pub mod logreg;
pub mod matrix;
pub mod metrics;

use thiserror::Error;

pub use boost::{predict_proba, train, BoostedEnsemble, Node, TrainConfig, Tree};
pub use cv::{ablation_run, kfold_cv, kfold_cv_with, stratified_folds, EvalReport, FoldMetrics, GridParams};
pub use logreg::{baseline_logreg_cv, train_baseline_logreg, LogRegConfig, LogisticModel};
pub use matrix::Matrix;
pub use metrics::{auc, log_loss, precision_recall_at, PrecisionRecall};

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("labels contain a single class")]
    SingleClass,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least {needed} samples per class for {folds}-fold CV, smallest class has {found}")]
    TooFewSamples { needed: usize, folds: usize, found: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("labels must be 0 or 1, got {0}")]
    InvalidLabel(u8),
}

/// Anything that maps a feature row to a probability of `status = 1`.
pub trait Classifier {
    fn n_features(&self) -> usize;
    fn predict_proba_unchecked(&self, row: &[f64]) -> f64;

    fn predict_proba(&self, row: &[f64]) -> Result<f64, LearnerError> {
        if row.len() != self.n_features() {
            return Err(LearnerError::DimensionMismatch {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        Ok(self.predict_proba_unchecked(row))
    }

    fn predict_batch(&self, x: &Matrix) -> Result<Vec<f64>, LearnerError> {
        if x.cols() != self.n_features() {
            return Err(LearnerError::DimensionMismatch {
                expected: self.n_features(),
                found: x.cols(),
            });
        }
        Ok((0..x.rows()).map(|i| self.predict_proba_unchecked(x.row(i))).collect())
    }
}

pub(crate) fn check_labels(x: &Matrix, y: &[u8]) -> Result<(), LearnerError> {
    if y.len() != x.rows() {
        return Err(LearnerError::DimensionMismatch {
            expected: x.rows(),
            found: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(LearnerError::InvalidLabel(bad));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(LearnerError::SingleClass);
    }
    Ok(())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    // keeps the result strictly inside (0, 1)
    let z = z.clamp(-36.0, 36.0);
    1.0 / (1.0 + (-z).exp())
}
