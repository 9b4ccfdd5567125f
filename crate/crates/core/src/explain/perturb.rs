//! Neighbourhood sampling around one instance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::learner::Matrix;
use crate::seeds;
use crate::stats::quantile_sorted;

/// How a feature is resampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureBins {
    /// Constant in training; held at the instance value.
    Degenerate,
    /// At most two distinct training values, drawn uniformly.
    Categorical { values: Vec<f64> },
    /// Quartile bins. `ranges` holds the training min and max of every
    /// non-empty bin, with its bin index.
    Quartile { edges: [f64; 3], ranges: Vec<(usize, f64, f64)> },
}

impl FeatureBins {
    /// Bin index of `x`: quartile number, or position among the categories.
    pub fn bin_of(&self, x: f64) -> usize {
        match self {
            FeatureBins::Degenerate => 0,
            FeatureBins::Categorical { values } => {
                values.iter().position(|&v| v == x).unwrap_or_else(|| {
                    // unseen category: nearest known value
                    let mut best = 0;
                    for (i, &v) in values.iter().enumerate() {
                        if (v - x).abs() < (values[best] - x).abs() {
                            best = i;
                        }
                    }
                    best
                })
            }
            FeatureBins::Quartile { edges, .. } => edges.iter().take_while(|&&e| x > e).count(),
        }
    }
}

/// Per-feature training statistics needed to perturb and standardize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub bins: Vec<FeatureBins>,
}

impl TrainStats {
    pub fn from_matrix(x: &Matrix) -> TrainStats {
        let n = x.rows() as f64;
        let mut out = TrainStats { mean: Vec::new(), std: Vec::new(), bins: Vec::new() };
        for j in 0..x.cols() {
            let mut col = x.column(j);
            col.sort_by(f64::total_cmp);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let mut distinct = col.clone();
            distinct.dedup();
            let bins = if distinct.len() <= 1 {
                FeatureBins::Degenerate
            } else if distinct.len() == 2 {
                FeatureBins::Categorical { values: distinct }
            } else {
                let edges = [0.25, 0.5, 0.75].map(|q| quantile_sorted(&col, q));
                let mut ranges: Vec<(usize, f64, f64)> = Vec::new();
                for &v in &col {
                    let b = edges.iter().take_while(|&&e| v > e).count();
                    match ranges.last_mut() {
                        Some(r) if r.0 == b => r.2 = v,
                        _ => ranges.push((b, v, v)),
                    }
                }
                FeatureBins::Quartile { edges, ranges }
            };
            out.mean.push(mean);
            out.std.push(var.sqrt());
            out.bins.push(bins);
        }
        out
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn is_degenerate(&self, j: usize) -> bool {
        matches!(self.bins[j], FeatureBins::Degenerate)
    }

    pub fn standardize(&self, j: usize, x: f64) -> f64 {
        if self.std[j] > 0.0 {
            (x - self.mean[j]) / self.std[j]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    /// Raw feature values of each sample.
    pub samples: Matrix,
    /// Euclidean distance to the instance on standardized values.
    pub distances: Vec<f64>,
}

/// Draws `n_samples` neighbours of `instance`. For every sample and feature
/// a bin is chosen uniformly among the non-empty training bins; the
/// instance's own bin keeps the instance value, any other bin is filled with
/// a uniform draw from that bin's training range.
pub fn perturb(instance: &[f64], stats: &TrainStats, n_samples: usize, seed: u64) -> Perturbation {
    let d = stats.n_features();
    assert_eq!(instance.len(), d, "instance width");
    let mut rng = seeds::rng(seeds::derive(seed, "perturb"));
    let mut data = Vec::with_capacity(n_samples * d);
    let mut distances = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut sq = 0.0;
        for (j, &x0) in instance.iter().enumerate() {
            let v = match &stats.bins[j] {
                FeatureBins::Degenerate => x0,
                FeatureBins::Categorical { values } => values[rng.random_range(0..values.len())],
                FeatureBins::Quartile { ranges, .. } => {
                    let (b, lo, hi) = ranges[rng.random_range(0..ranges.len())];
                    if b == stats.bins[j].bin_of(x0) {
                        x0
                    } else if hi > lo {
                        rng.random_range(lo..=hi)
                    } else {
                        lo
                    }
                }
            };
            let delta = stats.standardize(j, v) - stats.standardize(j, x0);
            sq += delta * delta;
            data.push(v);
        }
        distances.push(sq.sqrt());
    }
    Perturbation {
        samples: Matrix::new(n_samples, d, data).expect("sample matrix shape"),
        distances,
    }
}
