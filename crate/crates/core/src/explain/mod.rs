//! Local linear explanations of single predictions.
//!
//! Around each project the model is probed on a perturbed neighbourhood,
//! the samples are weighted by an exponential kernel on their distance to the
//! project, and a weighted ridge regression is fitted to the predicted
//! probabilities. Its coefficients are the explanation.

mod linear;
mod perturb;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learner::{Classifier, Matrix};
use crate::seeds;
pub use linear::{fit_local_linear, LinearFit};
pub use perturb::{perturb, FeatureBins, Perturbation, TrainStats};

#[derive(Debug, Error, PartialEq)]
pub enum ExplainError {
    #[error("kernel width must be positive, got {0}")]
    NonpositiveWidth(f64),
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("weights must be non-negative and not all zero")]
    InvalidWeights,
    #[error("design matrix is singular and ridge_alpha is 0")]
    RankDeficient,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub fn kernel_weight(distance: f64, width: f64) -> Result<f64, ExplainError> {
    if !(width > 0.0) {
        return Err(ExplainError::NonpositiveWidth(width));
    }
    Ok((-(distance * distance) / (width * width)).exp())
}

pub fn default_kernel_width(n_features: usize) -> f64 {
    0.75 * (n_features as f64).sqrt()
}

/// Columns the surrogate is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// 1 when the sample falls in the same bin as the explained instance.
    #[default]
    Indicator,
    /// Standardized feature values.
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub n_samples: usize,
    pub ridge_alpha: f64,
    /// Defaults to `0.75 * sqrt(n_features)`.
    pub kernel_width: Option<f64>,
    pub representation: Representation,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            n_samples: 5000,
            ridge_alpha: 1.0,
            kernel_width: None,
            representation: Representation::Indicator,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub project_id: String,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub fidelity: f64,
    pub n_samples: usize,
    pub seed: u64,
}

fn design(p: &Perturbation, instance: &[f64], stats: &TrainStats, repr: Representation) -> Matrix {
    let (n, d) = (p.samples.rows(), p.samples.cols());
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for (j, &x) in p.samples.row(i).iter().enumerate() {
            data.push(match repr {
                Representation::Continuous => stats.standardize(j, x),
                Representation::Indicator => {
                    f64::from(u8::from(stats.bins[j].bin_of(x) == stats.bins[j].bin_of(instance[j])))
                }
            });
        }
    }
    Matrix::new(n, d, data).expect("design shape")
}

/// Explains `model`'s prediction for one instance with an explicit seed.
pub fn explain<M: Classifier + ?Sized>(
    model: &M,
    project_id: &str,
    instance: &[f64],
    stats: &TrainStats,
    config: &ExplainConfig,
    seed: u64,
) -> Result<LocalExplanation, ExplainError> {
    let d = stats.n_features();
    if instance.len() != d || model.n_features() != d {
        return Err(ExplainError::DimensionMismatch { expected: d, found: instance.len().min(model.n_features()) });
    }
    let width = config.kernel_width.unwrap_or_else(|| default_kernel_width(d));
    let p = perturb(instance, stats, config.n_samples, seed);
    let outputs: Vec<f64> = (0..p.samples.rows()).map(|i| model.predict_proba_unchecked(p.samples.row(i))).collect();
    let weights = p
        .distances
        .iter()
        .map(|&dist| kernel_weight(dist, width))
        .collect::<Result<Vec<_>, _>>()?;
    let x = design(&p, instance, stats, config.representation);
    let fit = fit_local_linear(&x, &outputs, &weights, config.ridge_alpha)?;
    Ok(LocalExplanation {
        project_id: project_id.to_string(),
        coefficients: fit.coefficients,
        intercept: fit.intercept,
        fidelity: fit.fidelity,
        n_samples: config.n_samples,
        seed,
    })
}

/// Seed used for one project: derived from the master seed and the id.
pub fn project_seed(master: u64, project_id: &str) -> u64 {
    seeds::derive(master, project_id)
}

/// Explains every instance in parallel. Output order follows the input.
pub fn explain_batch<M: Classifier + Sync + ?Sized>(
    model: &M,
    instances: &[(String, Vec<f64>)],
    stats: &TrainStats,
    config: &ExplainConfig,
) -> Result<Vec<LocalExplanation>, ExplainError> {
    instances
        .par_iter()
        .map(|(id, row)| explain(model, id, row, stats, config, project_seed(config.seed, id)))
        .collect()
}
