//! Stratified k-fold evaluation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{auc, precision_recall_at, train, Classifier, LearnerError, Matrix, TrainConfig};
use crate::features::Dimension;
use crate::seeds;

/// Observation window and label thresholds a report was produced under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridParams {
    pub m: u32,
    pub t: u32,
    pub k: u32,
}

/// JSON has no NaN; serde_json writes it as `null`.
fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_test: usize,
    #[serde(deserialize_with = "nan_from_null")]
    pub auc: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub precision: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub recall: f64,
    pub precision_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub dimension: Option<String>,
    pub params: Option<GridParams>,
    #[serde(deserialize_with = "nan_from_null")]
    pub auc: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub precision: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub recall: f64,
    pub folds: Vec<FoldMetrics>,
    /// Why a report carries no metrics, when it could not be produced.
    #[serde(default)]
    pub note: Option<String>,
}

impl EvalReport {
    /// Placeholder for a cell that could not be evaluated.
    pub fn failed(model: &str, reason: impl ToString) -> Self {
        EvalReport {
            model: model.to_string(),
            dimension: None,
            params: None,
            auc: f64::NAN,
            precision: f64::NAN,
            recall: f64::NAN,
            folds: Vec::new(),
            note: Some(reason.to_string()),
        }
    }
}

/// Fold index of every row. Each class is shuffled separately and dealt
/// round-robin; the negative class continues where the positives stopped so
/// fold sizes differ by at most one.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>, LearnerError> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1).collect();
    let smallest = pos.len().min(neg.len());
    if folds < 2 || smallest < folds {
        return Err(LearnerError::TooFewSamples {
            needed: folds.max(2),
            folds,
            found: smallest,
        });
    }
    let mut rng = seeds::rng(seeds::derive(seed, "folds"));
    let mut out = vec![0; labels.len()];
    let mut offset = 0;
    for mut class in [pos, neg] {
        class.shuffle(&mut rng);
        for (j, &i) in class.iter().enumerate() {
            out[i] = (offset + j) % folds;
        }
        offset += class.len();
    }
    Ok(out)
}

/// Cross-validates any model produced by `fit`.
pub fn kfold_cv_with<M, F>(
    x: &Matrix,
    y: &[u8],
    folds: usize,
    seed: u64,
    model: &str,
    fit: F,
) -> Result<EvalReport, LearnerError>
where
    M: Classifier,
    F: Fn(&Matrix, &[u8], usize) -> Result<M, LearnerError>,
{
    super::check_labels(x, y)?;
    let assignment = stratified_folds(y, folds, seed)?;
    let mut per_fold = Vec::with_capacity(folds);
    for fold in 0..folds {
        let (test, tr): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| assignment[i] == fold);
        let train_y: Vec<u8> = tr.iter().map(|&i| y[i]).collect();
        let test_y: Vec<u8> = test.iter().map(|&i| y[i]).collect();
        let fitted = fit(&x.select_rows(&tr), &train_y, fold)?;
        let scores = fitted.predict_batch(&x.select_rows(&test))?;
        let pr = precision_recall_at(&scores, &test_y, 0.5);
        per_fold.push(FoldMetrics {
            fold,
            n_test: test.len(),
            auc: auc(&scores, &test_y)?,
            precision: pr.precision,
            recall: pr.recall,
            precision_defined: pr.precision_defined,
        });
    }
    let mean = |f: fn(&FoldMetrics) -> f64| per_fold.iter().map(f).sum::<f64>() / per_fold.len() as f64;
    Ok(EvalReport {
        model: model.to_string(),
        dimension: None,
        params: None,
        auc: mean(|f| f.auc),
        precision: mean(|f| f.precision),
        recall: mean(|f| f.recall),
        folds: per_fold,
        note: None,
    })
}

/// Cross-validates the boosted model. Fold `i` trains with a seed derived
/// from `config.seed` and `i`.
pub fn kfold_cv(
    x: &Matrix,
    y: &[u8],
    config: &TrainConfig,
    folds: usize,
    seed: u64,
) -> Result<EvalReport, LearnerError> {
    kfold_cv_with(x, y, folds, seed, "boosted_trees", |tx, ty, fold| {
        let cfg = TrainConfig {
            seed: seeds::derive_indexed(config.seed, "fold", fold as u64),
            ..config.clone()
        };
        train(tx, ty, &cfg)
    })
}

/// Cross-validates the boosted model on one column subset of the canonical
/// 64-column matrix.
pub fn ablation_run(
    x: &Matrix,
    y: &[u8],
    dimension: Dimension,
    config: &TrainConfig,
    folds: usize,
    seed: u64,
) -> Result<EvalReport, LearnerError> {
    let cols = dimension.columns();
    if x.cols() != crate::features::N_FEATURES {
        return Err(LearnerError::DimensionMismatch {
            expected: crate::features::N_FEATURES,
            found: x.cols(),
        });
    }
    let sub = if cols.len() == x.cols() { x.clone() } else { x.select_columns(&cols) };
    let mut report = kfold_cv(&sub, y, config, folds, seed)?;
    report.dimension = Some(dimension.as_str().to_string());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn balanced_hundred_gives_five_per_class_per_fold() {
        let y: Vec<u8> = (0..100).map(|i| u8::from(i % 2 == 0)).collect();
        let f = stratified_folds(&y, 10, 4).unwrap();
        for fold in 0..10 {
            let rows: Vec<usize> = (0..100).filter(|&i| f[i] == fold).collect();
            assert_eq!(rows.len(), 10);
            assert_eq!(rows.iter().filter(|&&i| y[i] == 1).count(), 5);
        }
        assert_eq!(f, stratified_folds(&y, 10, 4).unwrap());
        assert_ne!(f, stratified_folds(&y, 10, 5).unwrap());
    }

    #[test]
    fn failed_report_survives_json() {
        let r = EvalReport::failed("boosted_trees", "single class");
        let back: EvalReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert!(back.auc.is_nan() && back.recall.is_nan());
        assert_eq!(back.note.as_deref(), Some("single class"));
    }

    #[test]
    fn too_few_rows_per_class() {
        let y = [1, 1, 0, 0, 0, 0];
        assert!(matches!(stratified_folds(&y, 3, 0), Err(LearnerError::TooFewSamples { found: 2, .. })));
    }

    #[test]
    fn null_labels_give_chance_auc() {
        let mut rng = seeds::rng(17);
        let n = 2000;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let cfg = TrainConfig { n_trees: 30, max_depth: 3, ..Default::default() };
        let r = kfold_cv(&x, &y, &cfg, 5, 1).unwrap();
        assert_eq!(r.folds.len(), 5);
        assert!((r.auc - 0.5).abs() < 0.03, "{}", r.auc);
        let mean: f64 = r.folds.iter().map(|f| f.auc).sum::<f64>() / 5.0;
        assert_eq!(mean, r.auc);
    }

    #[test]
    fn ablation_all_equals_full_model() {
        let mut rng = seeds::rng(2);
        let n = 120;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..64).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r[22] > 0.5)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let cfg = TrainConfig { n_trees: 10, max_depth: 2, ..Default::default() };
        let full = kfold_cv(&x, &y, &cfg, 3, 8).unwrap();
        let all = ablation_run(&x, &y, Dimension::All, &cfg, 3, 8).unwrap();
        assert_eq!(full.folds, all.folds);
        let stab = ablation_run(&x, &y, Dimension::Stability, &cfg, 3, 8).unwrap();
        assert!(stab.auc > 0.9);
        let pop = ablation_run(&x, &y, Dimension::Popularity, &cfg, 3, 8).unwrap();
        assert!(pop.auc < 0.75);
    }

    proptest::proptest! {
        #[test]
        fn folds_partition_rows(labels in proptest::collection::vec(0u8..2, 20..120), k in 2usize..6, seed: u64) {
            let pos = labels.iter().filter(|&&l| l == 1).count();
            proptest::prop_assume!(pos >= k && labels.len() - pos >= k);
            let f = stratified_folds(&labels, k, seed).unwrap();
            proptest::prop_assert_eq!(f.len(), labels.len());
            let mut sizes = vec![0usize; k];
            for &x in &f { sizes[x] += 1; }
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            proptest::prop_assert!(hi - lo <= 1);
        }
    }
}
