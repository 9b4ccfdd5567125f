//! L2-regularized logistic regression fit by Newton's method on
//! standardized features.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_labels, kfold_cv_with, sigmoid, Classifier, EvalReport, LearnerError, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub l2_lambda: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig { l2_lambda: 1.0, tolerance: 1e-6, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Coefficients on standardized features.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl LogisticModel {
    fn margin(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.mean)
                .zip(&self.scale)
                .zip(&self.weights)
                .map(|(((x, m), s), w)| w * (x - m) / s)
                .sum::<f64>()
    }
}

impl Classifier for LogisticModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba_unchecked(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

fn objective(z: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let eta = z * beta;
    let nll: f64 = eta
        .iter()
        .zip(y.iter())
        .map(|(&e, &t)| e.max(0.0) + (-e.abs()).exp().ln_1p() - t * e)
        .sum();
    let d = beta.len() - 1;
    nll + 0.5 * lambda * beta.rows(1, d).norm_squared()
}

pub fn train_baseline_logreg(x: &Matrix, y: &[u8], cfg: &LogRegConfig) -> Result<LogisticModel, LearnerError> {
    check_labels(x, y)?;
    let (n, d) = (x.rows(), x.cols());
    let mut mean = vec![0.0; d];
    let mut scale = vec![1.0; d];
    for j in 0..d {
        let col = x.column(j);
        mean[j] = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n as f64;
        if var > 0.0 {
            scale[j] = var.sqrt();
        }
    }
    // design with a leading intercept column
    let z = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { (x.get(i, j - 1) - mean[j - 1]) / scale[j - 1] });
    let t = DVector::from_iterator(n, y.iter().map(|&v| v as f64));
    let lambda = cfg.l2_lambda;
    let mut beta = DVector::zeros(d + 1);
    let mut penalty = DVector::from_element(d + 1, lambda);
    penalty[0] = 0.0;

    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    let mut current = objective(&z, &t, &beta, lambda);
    while iterations < cfg.max_iter {
        let p = (&z * &beta).map(sigmoid);
        let grad = z.tr_mul(&(&p - &t)) + penalty.component_mul(&beta);
        grad_norm = grad.norm();
        if grad_norm < cfg.tolerance {
            break;
        }
        let w = p.map(|v| v * (1.0 - v));
        let mut hess = z.tr_mul(&DMatrix::from_fn(n, d + 1, |i, j| z[(i, j)] * w[i]));
        for j in 0..=d {
            hess[(j, j)] += penalty[j] + 1e-10;
        }
        let Some(chol) = hess.cholesky() else { break };
        let step = chol.solve(&grad);
        let mut size = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand = &beta - &step * size;
            let obj = objective(&z, &t, &cand, lambda);
            if obj <= current {
                beta = cand;
                current = obj;
                moved = true;
                break;
            }
            size *= 0.5;
        }
        iterations += 1;
        if !moved {
            break;
        }
    }
    Ok(LogisticModel {
        mean,
        scale,
        weights: beta.iter().skip(1).copied().collect(),
        intercept: beta[0],
        iterations,
        gradient_norm: grad_norm,
    })
}

/// Fits on all rows and cross-validates with the same fold scheme as the
/// boosted model.
pub fn baseline_logreg_cv(
    x: &Matrix,
    y: &[u8],
    cfg: &LogRegConfig,
    folds: usize,
    seed: u64,
) -> Result<(LogisticModel, EvalReport), LearnerError> {
    let model = train_baseline_logreg(x, y, cfg)?;
    let report = kfold_cv_with(x, y, folds, seed, "logistic_regression", |tx, ty, _| {
        train_baseline_logreg(tx, ty, cfg)
    })?;
    Ok((model, report))
}
