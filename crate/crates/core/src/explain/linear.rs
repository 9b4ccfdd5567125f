//! Weighted ridge regression with an unpenalized intercept.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ExplainError;
use crate::learner::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Weighted R² of the fit.
    pub fidelity: f64,
}

/// Minimizes `Σ wᵢ(yᵢ − b − xᵢ·β)² + α‖β‖²` with weights rescaled to mean 1.
/// Columns with zero weighted variance get coefficient 0.
pub fn fit_local_linear(x: &Matrix, y: &[f64], weights: &[f64], ridge_alpha: f64) -> Result<LinearFit, ExplainError> {
    let (n, d) = (x.rows(), x.cols());
    if y.len() != n || weights.len() != n {
        return Err(ExplainError::DimensionMismatch { expected: n, found: y.len().min(weights.len()) });
    }
    if n < d + 1 {
        return Err(ExplainError::TooFewSamples { needed: d + 1, found: n });
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w >= 0.0)) || !(total > 0.0) {
        return Err(ExplainError::InvalidWeights);
    }
    let w: Vec<f64> = weights.iter().map(|v| v * n as f64 / total).collect();
    let wsum = n as f64;

    let y_mean = w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let x_mean: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| w[i] * x.get(i, j)).sum::<f64>() / wsum)
        .collect();
    let active: Vec<usize> = (0..d)
        .filter(|&j| (0..n).map(|i| w[i] * (x.get(i, j) - x_mean[j]).powi(2)).sum::<f64>() > 1e-12 * wsum)
        .collect();

    let k = active.len();
    let mut beta_full = vec![0.0; d];
    if k > 0 {
        // rows scaled by sqrt(w) after centering
        let xs = DMatrix::from_fn(n, k, |i, c| w[i].sqrt() * (x.get(i, active[c]) - x_mean[active[c]]));
        let ys = DVector::from_fn(n, |i, _| w[i].sqrt() * (y[i] - y_mean));
        let mut gram = xs.tr_mul(&xs);
        for c in 0..k {
            gram[(c, c)] += ridge_alpha;
        }
        let rhs = xs.tr_mul(&ys);
        let chol = gram.clone().cholesky().ok_or(ExplainError::RankDeficient)?;
        let mut beta = chol.solve(&rhs);
        // one refinement step against round-off
        let resid = &rhs - &gram * &beta;
        if resid.norm() > 1e-8 {
            beta += chol.solve(&resid);
        }
        for (c, &j) in active.iter().enumerate() {
            beta_full[j] = beta[c];
        }
    }
    let intercept = y_mean - beta_full.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();

    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..n {
        let pred = intercept + x.row(i).iter().zip(&beta_full).map(|(a, b)| a * b).sum::<f64>();
        ss_res += w[i] * (y[i] - pred).powi(2);
        ss_tot += w[i] * (y[i] - y_mean).powi(2);
    }
    let fidelity = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res <= 1e-18 * wsum { 1.0 } else { 0.0 };
    Ok(LinearFit { coefficients: beta_full, intercept, fidelity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use rand::Rng;

    fn random_design(n: usize, d: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = seeds::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let w = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        (Matrix::from_rows(&rows).unwrap(), w)
    }

    #[test]
    fn recovers_exact_linear_function() {
        let (x, w) = random_design(200, 5, 1);
        let truth = [0.5, -1.25, 0.0, 2.0, 0.1];
        let y: Vec<f64> = (0..200).map(|i| 0.3 + x.row(i).iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>()).collect();
        let fit = fit_local_linear(&x, &y, &w, 1e-12).unwrap();
        for (c, t) in fit.coefficients.iter().zip(truth) {
            assert!((c - t).abs() < 1e-6, "{c} vs {t}");
        }
        assert!((fit.intercept - 0.3).abs() < 1e-6);
        assert!((fit.fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_outputs() {
        let (x, w) = random_design(100, 4, 2);
        let fit = fit_local_linear(&x, &[0.42; 100], &w, 1.0).unwrap();
        assert!(fit.coefficients.iter().all(|c| c.abs() < 1e-12));
        assert!((fit.intercept - 0.42).abs() < 1e-12);
    }

    #[test]
    fn weight_scale_invariance() {
        let (x, w) = random_design(100, 4, 3);
        let y: Vec<f64> = (0..100).map(|i| x.get(i, 0).sin() + x.get(i, 2)).collect();
        let a = fit_local_linear(&x, &y, &w, 1.0).unwrap();
        let doubled: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        let b = fit_local_linear(&x, &y, &doubled, 1.0).unwrap();
        for (p, q) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((p - q).abs() < 1e-12);
        }
        assert!(a.fidelity >= 0.0 && a.fidelity <= 1.0 + 1e-9);
    }

    #[test]
    fn singular_design_without_ridge() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(fit_local_linear(&x, &y, &[1.0; 10], 0.0), Err(ExplainError::RankDeficient));
        assert!(fit_local_linear(&x, &y, &[1.0; 10], 1.0).is_ok());
        assert_eq!(fit_local_linear(&x, &y, &[0.0; 10], 1.0), Err(ExplainError::InvalidWeights));
    }
}
