//! Second-order gradient boosting with regression trees and a logistic link.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_labels, sigmoid, Classifier, LearnerError, Matrix};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub l2_lambda: f64,
    /// Splits must improve the loss by more than this.
    pub min_split_gain: f64,
    pub subsample: f64,
    pub colsample: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_trees: 200,
            max_depth: 6,
            learning_rate: 0.1,
            min_child_weight: 1.0,
            l2_lambda: 1.0,
            min_split_gain: 0.0,
            subsample: 1.0,
            colsample: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::InvalidConfig(m.to_string()));
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if self.l2_lambda < 0.0 || self.min_child_weight < 0.0 || self.min_split_gain < 0.0 {
            return bad("l2_lambda, min_child_weight and min_split_gain must be non-negative");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) || !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return bad("subsample and colsample must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] < threshold` go left; missing values follow
    /// `default_left`.
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        left: usize,
        right: usize,
    },
    Leaf { weight: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_value(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { weight } => return *weight,
                Node::Split { feature, threshold, default_left, left, right } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() { *default_left } else { v < *threshold };
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// A trained ensemble. Serializes to a self-describing JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub n_features: usize,
    pub base_score: f64,
    pub config: TrainConfig,
    pub trees: Vec<Tree>,
}

impl BoostedEnsemble {
    /// An ensemble with no trees predicting `sigmoid(base_score)` everywhere.
    pub fn constant(n_features: usize, base_score: f64) -> Self {
        BoostedEnsemble {
            n_features,
            base_score,
            config: TrainConfig::default(),
            trees: Vec::new(),
        }
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.leaf_value(row)).sum::<f64>()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

impl Classifier for BoostedEnsemble {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba_unchecked(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

pub fn predict_proba(model: &BoostedEnsemble, row: &[f64]) -> Result<f64, LearnerError> {
    model.predict_proba(row)
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    threshold: f64,
}

struct Frontier {
    node: usize,
    g: f64,
    h: f64,
}

fn leaf_weight(g: f64, h: f64, cfg: &TrainConfig) -> f64 {
    -g / (h + cfg.l2_lambda) * cfg.learning_rate
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Best split of every frontier node on one feature.
fn scan_feature(
    order: &[u32],
    column: &[f64],
    slot_of: &[u32],
    grad: &[f64],
    hess: &[f64],
    frontier: &[Frontier],
    cfg: &TrainConfig,
) -> Vec<Option<Candidate>> {
    let k = frontier.len();
    let mut gl = vec![0.0; k];
    let mut hl = vec![0.0; k];
    let mut last = vec![f64::NAN; k];
    let mut best: Vec<Option<Candidate>> = vec![None; k];
    for &r in order {
        let r = r as usize;
        let s = slot_of[r];
        if s == NONE {
            continue;
        }
        let s = s as usize;
        let v = column[r];
        if v.is_nan() {
            continue;
        }
        if !last[s].is_nan() && v > last[s] {
            let f = &frontier[s];
            let (gr, hr) = (f.g - gl[s], f.h - hl[s]);
            if hl[s] >= cfg.min_child_weight && hr >= cfg.min_child_weight {
                let gain = 0.5
                    * (score(gl[s], hl[s], cfg.l2_lambda) + score(gr, hr, cfg.l2_lambda)
                        - score(f.g, f.h, cfg.l2_lambda));
                if best[s].is_none_or(|b| gain > b.gain) {
                    best[s] = Some(Candidate { gain, threshold: 0.5 * (last[s] + v) });
                }
            }
        }
        gl[s] += grad[r];
        hl[s] += hess[r];
        last[s] = v;
    }
    best
}

fn grow_tree(
    columns: &[Vec<f64>],
    orders: &[Vec<u32>],
    features: &[usize],
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    cfg: &TrainConfig,
) -> Tree {
    let n = grad.len();
    let mut slot_of = vec![NONE; n];
    let mut node_of = vec![0usize; n];
    for &r in rows {
        slot_of[r] = 0;
    }
    let (g0, h0) = rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + grad[r], h + hess[r]));
    let mut nodes = vec![Node::Leaf { weight: 0.0 }];
    let mut frontier = vec![Frontier { node: 0, g: g0, h: h0 }];

    for _depth in 0..cfg.max_depth {
        if frontier.is_empty() {
            break;
        }
        let per_feature: Vec<Vec<Option<Candidate>>> = features
            .par_iter()
            .map(|&f| scan_feature(&orders[f], &columns[f], &slot_of, grad, hess, &frontier, cfg))
            .collect();

        // deterministic reduction: highest gain, lower feature index on ties
        let mut chosen: Vec<Option<(usize, Candidate)>> = vec![None; frontier.len()];
        for (fi, cands) in per_feature.iter().enumerate() {
            for (s, c) in cands.iter().enumerate() {
                if let Some(c) = c {
                    if c.gain > cfg.min_split_gain && chosen[s].is_none_or(|(_, b)| c.gain > b.gain) {
                        chosen[s] = Some((features[fi], *c));
                    }
                }
            }
        }

        let mut next = Vec::new();
        let mut child_slots = vec![(NONE, NONE); frontier.len()];
        for (s, f) in frontier.iter().enumerate() {
            match chosen[s] {
                None => nodes[f.node] = Node::Leaf { weight: leaf_weight(f.g, f.h, cfg) },
                Some((feature, c)) => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf { weight: 0.0 });
                    nodes.push(Node::Leaf { weight: 0.0 });
                    nodes[f.node] = Node::Split {
                        feature,
                        threshold: c.threshold,
                        default_left: true,
                        left,
                        right: left + 1,
                    };
                    child_slots[s] = (next.len() as u32, next.len() as u32 + 1);
                    next.push(Frontier { node: left, g: 0.0, h: 0.0 });
                    next.push(Frontier { node: left + 1, g: 0.0, h: 0.0 });
                }
            }
        }
        for &r in rows {
            let s = slot_of[r];
            if s == NONE {
                continue;
            }
            let (l, rr) = child_slots[s as usize];
            if l == NONE {
                slot_of[r] = NONE;
                continue;
            }
            let Node::Split { feature, threshold, .. } = nodes[node_of[r]] else {
                unreachable!()
            };
            let v = columns[feature][r];
            let ns = if v.is_nan() || v < threshold { l } else { rr };
            slot_of[r] = ns;
            let fr = &mut next[ns as usize];
            fr.g += grad[r];
            fr.h += hess[r];
            node_of[r] = fr.node;
        }
        frontier = next;
    }
    for f in &frontier {
        nodes[f.node] = Node::Leaf { weight: leaf_weight(f.g, f.h, cfg) };
    }
    Tree { nodes }
}

/// Fits the ensemble on `x` (rows are projects) and binary labels `y`.
pub fn train(x: &Matrix, y: &[u8], cfg: &TrainConfig) -> Result<BoostedEnsemble, LearnerError> {
    check_labels(x, y)?;
    cfg.validate()?;
    let n = x.rows();
    let d = x.cols();
    let columns: Vec<Vec<f64>> = (0..d).map(|j| x.column(j)).collect();
    let orders: Vec<Vec<u32>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    let rate = pos / n as f64;
    let base_score = (rate / (1.0 - rate)).ln();
    let mut margin = vec![base_score; n];
    let mut rng = seeds::rng(seeds::derive(cfg.seed, "boost"));
    let n_rows = ((n as f64 * cfg.subsample).round() as usize).clamp(1, n);
    let n_cols = ((d as f64 * cfg.colsample).round() as usize).clamp(1, d.max(1));

    let mut trees = Vec::with_capacity(cfg.n_trees);
    for _ in 0..cfg.n_trees {
        let (grad, hess): (Vec<f64>, Vec<f64>) = margin
            .iter()
            .zip(y)
            .map(|(&m, &t)| {
                let p = sigmoid(m);
                (p - t as f64, p * (1.0 - p))
            })
            .unzip();
        let mut rows: Vec<usize> = if n_rows < n {
            sample(&mut rng, n, n_rows).into_vec()
        } else {
            (0..n).collect()
        };
        rows.sort_unstable();
        let mut features: Vec<usize> = if n_cols < d {
            sample(&mut rng, d, n_cols).into_vec()
        } else {
            (0..d).collect()
        };
        features.sort_unstable();

        let tree = grow_tree(&columns, &orders, &features, &rows, &grad, &hess, cfg);
        for (i, m) in margin.iter_mut().enumerate() {
            *m += tree.leaf_value(x.row(i));
        }
        trees.push(tree);
    }
    Ok(BoostedEnsemble {
        n_features: d,
        base_score,
        config: cfg.clone(),
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{auc, log_loss};
    use rand::Rng;

    fn separable(n: usize) -> (Matrix, Vec<u8>) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let y = (0..n).map(|i| u8::from(i >= n / 2)).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    fn small() -> TrainConfig {
        TrainConfig { n_trees: 20, max_depth: 3, ..Default::default() }
    }

    #[test]
    fn separable_data_reaches_auc_one() {
        let (x, y) = separable(100);
        let m = train(&x, &y, &small()).unwrap();
        let p = m.predict_batch(&x).unwrap();
        assert_eq!(auc(&p, &y).unwrap(), 1.0);
        assert!(m.trees.iter().all(|t| t.depth() <= 3));
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = separable(10);
        assert_eq!(train(&x, &[1; 10], &small()), Err(LearnerError::SingleClass));
    }

    #[test]
    fn wrong_row_length_rejected() {
        let (x, y) = separable(20);
        let m = train(&x, &y, &small()).unwrap();
        assert!(matches!(
            m.predict_proba(&[1.0]),
            Err(LearnerError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn base_score_is_training_log_odds() {
        let (x, _) = separable(40);
        let y: Vec<u8> = (0..40).map(|i| u8::from(i < 10)).collect();
        let m = train(&x, &y, &small()).unwrap();
        assert!((m.base_score - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        let zero = TrainConfig { n_trees: 0, ..small() };
        assert!(matches!(train(&x, &y, &zero), Err(LearnerError::InvalidConfig(_))));
    }

    #[test]
    fn training_loss_does_not_increase() {
        let mut rng = seeds::rng(3);
        let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + 0.3 * rng.random::<f64>() > 0.6)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let m = train(&x, &y, &small()).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=m.trees.len() {
            let partial = BoostedEnsemble { trees: m.trees[..k].to_vec(), ..m.clone() };
            let loss = log_loss(&partial.predict_batch(&x).unwrap(), &y);
            assert!(loss <= prev + 1e-12, "tree {k}: {loss} > {prev}");
            prev = loss;
        }
    }

    #[test]
    fn deterministic_and_json_round_trip() {
        let (x, y) = separable(60);
        let cfg = TrainConfig { subsample: 0.7, colsample: 0.5, seed: 9, ..small() };
        let a = train(&x, &y, &cfg).unwrap();
        let b = train(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        let back = BoostedEnsemble::from_json(&a.to_json()).unwrap();
        assert_eq!(a.predict_batch(&x).unwrap(), back.predict_batch(&x).unwrap());
    }

    #[test]
    fn missing_values_follow_default_branch() {
        let (x, y) = separable(50);
        let m = train(&x, &y, &small()).unwrap();
        let p = m.predict_proba(&[f64::NAN, 3.0]).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn large_min_split_gain_leaves_single_leaves() {
        let (x, y) = separable(40);
        let cfg = TrainConfig { min_split_gain: 1e9, ..small() };
        let m = train(&x, &y, &cfg).unwrap();
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn closed_form_small_ensembles() {
        let mut m = BoostedEnsemble::constant(3, 0.0);
        assert_eq!(m.predict_proba(&[1.0, 2.0, 3.0]).unwrap(), 0.5);
        m.trees.push(Tree { nodes: vec![Node::Leaf { weight: 0.7 }] });
        assert_eq!(m.predict_proba(&[1.0, 2.0, 3.0]).unwrap(), sigmoid(0.7));
    }

    #[test]
    fn zero_leaf_tree_changes_nothing() {
        let (x, y) = separable(40);
        let mut m = train(&x, &y, &small()).unwrap();
        let before = m.predict_batch(&x).unwrap();
        m.trees.push(Tree {
            nodes: vec![
                Node::Split { feature: 0, threshold: 10.0, default_left: true, left: 1, right: 2 },
                Node::Leaf { weight: 0.0 },
                Node::Leaf { weight: 0.0 },
            ],
        });
        assert_eq!(before, m.predict_batch(&x).unwrap());
    }

    #[test]
    fn batch_matches_scalar() {
        let (x, y) = separable(80);
        let m = train(&x, &y, &small()).unwrap();
        let batch = m.predict_batch(&x).unwrap();
        for (i, p) in batch.iter().enumerate() {
            assert_eq!(*p, m.predict_proba(x.row(i)).unwrap());
            assert!(*p > 0.0 && *p < 1.0);
        }
    }
}
