//! Which variables separate projects whose explanation pushes the variable
//! up from those where it pushes it down.
//!
//! For each variable the corpus is split by the sign of its local
//! coefficient, the raw values of the two groups are compared with a
//! Mann-Whitney U test, and the effect size `r = |z| / sqrt(N)` is binned into
//! negligible / small / medium / large.

pub mod rank_test;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{definition, feature_index, FEATURE_NAMES, N_FEATURES};
use crate::stats::{mean, median};
pub use rank_test::{mann_whitney_u, MannWhitney};

/// Groups smaller than this get the `small_group` flag.
pub const SMALL_GROUP: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum DeterminantError {
    #[error("variable {variable}: {which} group is empty")]
    EmptyGroup { variable: String, which: &'static str },
    #[error("need explanations for at least two projects, got {0}")]
    TooFewProjects(usize),
    #[error("project {0} has an explanation but no feature row")]
    MissingFeatures(String),
    #[error("row for project {project} has {found} values, expected {expected}")]
    WrongWidth { project: String, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSplit {
    pub negative: Vec<String>,
    pub positive: Vec<String>,
    /// Projects whose coefficient is exactly zero.
    pub excluded: usize,
}

fn partition(coefficients: &BTreeMap<String, Vec<f64>>, column: usize) -> GroupSplit {
    let mut split = GroupSplit { negative: Vec::new(), positive: Vec::new(), excluded: 0 };
    for (id, c) in coefficients {
        let v = c[column];
        if v > 0.0 {
            split.positive.push(id.clone());
        } else if v < 0.0 {
            split.negative.push(id.clone());
        } else {
            split.excluded += 1;
        }
    }
    split
}

/// Sign partition of the projects on one variable's coefficient.
pub fn split_groups(
    coefficients: &BTreeMap<String, Vec<f64>>,
    variable: &str,
) -> Result<GroupSplit, DeterminantError> {
    if coefficients.len() < 2 {
        return Err(DeterminantError::TooFewProjects(coefficients.len()));
    }
    let column = feature_index(variable).expect("known variable");
    let split = partition(coefficients, column);
    let empty = |which| DeterminantError::EmptyGroup { variable: variable.to_string(), which };
    if split.negative.is_empty() {
        return Err(empty("negative"));
    }
    if split.positive.is_empty() {
        return Err(empty("positive"));
    }
    Ok(split)
}

pub fn bonferroni_threshold(n_tests: usize, alpha: f64) -> f64 {
    alpha / n_tests.max(1) as f64
}

pub fn bonferroni_significant(p: f64, n_tests: usize, alpha: f64) -> bool {
    p < bonferroni_threshold(n_tests, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::None => "none",
        }
    }
}

impl Magnitude {
    pub fn as_str(self) -> &'static str {
        match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        }
    }

    pub fn from_r(r: f64) -> Magnitude {
        if r >= 0.5 {
            Magnitude::Large
        } else if r >= 0.3 {
            Magnitude::Medium
        } else if r >= 0.1 {
            Magnitude::Small
        } else {
            Magnitude::Negligible
        }
    }
}

/// Direction from the group medians, magnitude from `r`. Equal medians give
/// no direction and a negligible effect.
pub fn classify_effect(median_neg: f64, median_pos: f64, r: f64) -> (Direction, Magnitude) {
    if median_pos > median_neg {
        (Direction::Up, Magnitude::from_r(r))
    } else if median_pos < median_neg {
        (Direction::Down, Magnitude::from_r(r))
    } else {
        (Direction::None, Magnitude::Negligible)
    }
}

/// Arrow glyph per table cell: one to three arrows for small to large,
/// `-` for negligible.
pub fn glyph(direction: Direction, magnitude: Magnitude) -> String {
    let arrow = match direction {
        Direction::Up => "↑",
        Direction::Down => "↓",
        Direction::None => return "-".to_string(),
    };
    match magnitude {
        Magnitude::Negligible => "-".to_string(),
        Magnitude::Small => arrow.repeat(1),
        Magnitude::Medium => arrow.repeat(2),
        Magnitude::Large => arrow.repeat(3),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub median: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantRecord {
    pub variable: String,
    pub definition: String,
    pub n_neg: usize,
    pub n_pos: usize,
    pub n_zero: usize,
    pub negative: Option<GroupStats>,
    pub positive: Option<GroupStats>,
    pub test: Option<MannWhitney>,
    pub r: Option<f64>,
    pub direction: Direction,
    pub magnitude: Magnitude,
    pub significant: bool,
    /// One of the groups is empty; no test was run.
    pub empty_group: bool,
    /// The smaller group has fewer than [`SMALL_GROUP`] projects.
    pub small_group: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantTable {
    /// `all`, `organization` or `user`.
    pub stratum: String,
    pub n_projects: usize,
    pub n_tests: usize,
    pub alpha: f64,
    pub threshold: f64,
    pub records: Vec<DeterminantRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantAnalysis {
    pub overall: DeterminantTable,
    /// The same analysis within organization-owned and user-owned projects.
    pub by_owner_type: Vec<DeterminantTable>,
}

fn stats_of(values: &[f64]) -> Option<GroupStats> {
    Some(GroupStats { median: median(values)?, mean: mean(values)? })
}

fn record_for(
    column: usize,
    features: &BTreeMap<String, Vec<f64>>,
    coefficients: &BTreeMap<String, Vec<f64>>,
) -> DeterminantRecord {
    let split = partition(coefficients, column);
    let values = |ids: &[String]| -> Vec<f64> { ids.iter().map(|id| features[id][column]).collect() };
    let neg = values(&split.negative);
    let pos = values(&split.positive);
    let name = FEATURE_NAMES[column];
    let mut rec = DeterminantRecord {
        variable: name.to_string(),
        definition: definition(name),
        n_neg: neg.len(),
        n_pos: pos.len(),
        n_zero: split.excluded,
        negative: stats_of(&neg),
        positive: stats_of(&pos),
        test: None,
        r: None,
        direction: Direction::None,
        magnitude: Magnitude::Negligible,
        significant: false,
        empty_group: neg.is_empty() || pos.is_empty(),
        small_group: neg.len().min(pos.len()) < SMALL_GROUP,
    };
    if rec.empty_group {
        return rec;
    }
    let test = mann_whitney_u(&pos, &neg);
    let r = test.z.abs() / ((neg.len() + pos.len()) as f64).sqrt();
    let (direction, magnitude) =
        classify_effect(rec.negative.unwrap().median, rec.positive.unwrap().median, r);
    rec.test = Some(test);
    rec.r = Some(r);
    rec.direction = direction;
    rec.magnitude = magnitude;
    rec
}

fn table(
    stratum: &str,
    features: &BTreeMap<String, Vec<f64>>,
    coefficients: &BTreeMap<String, Vec<f64>>,
    alpha: f64,
) -> DeterminantTable {
    let mut records: Vec<DeterminantRecord> = (0..N_FEATURES)
        .into_par_iter()
        .map(|c| record_for(c, features, coefficients))
        .collect();
    let n_tests = records.iter().filter(|r| !r.empty_group).count();
    for r in &mut records {
        if let Some(t) = r.test {
            r.significant = bonferroni_significant(t.p, n_tests, alpha);
        }
    }
    DeterminantTable {
        stratum: stratum.to_string(),
        n_projects: coefficients.len(),
        n_tests,
        alpha,
        threshold: bonferroni_threshold(n_tests, alpha),
        records,
    }
}

/// One record per variable over all explained projects, plus the same table
/// within each owner type (the `type` column: 0 organization, 1 user).
pub fn build_determinant_table(
    features: &BTreeMap<String, Vec<f64>>,
    coefficients: &BTreeMap<String, Vec<f64>>,
    alpha: f64,
) -> Result<DeterminantAnalysis, DeterminantError> {
    if coefficients.len() < 2 {
        return Err(DeterminantError::TooFewProjects(coefficients.len()));
    }
    for (id, c) in coefficients {
        let f = features.get(id).ok_or_else(|| DeterminantError::MissingFeatures(id.clone()))?;
        for row in [c, f] {
            if row.len() != N_FEATURES {
                return Err(DeterminantError::WrongWidth {
                    project: id.clone(),
                    expected: N_FEATURES,
                    found: row.len(),
                });
            }
        }
    }
    let overall = table("all", features, coefficients, alpha);
    let type_col = feature_index("type").expect("type column");
    let mut by_owner_type = Vec::new();
    for (stratum, code) in [("organization", 0.0), ("user", 1.0)] {
        let subset: BTreeMap<String, Vec<f64>> = coefficients
            .iter()
            .filter(|(id, _)| features[*id][type_col] == code)
            .map(|(id, c)| (id.clone(), c.clone()))
            .collect();
        if subset.len() >= 2 {
            by_owner_type.push(table(stratum, features, &subset, alpha));
        }
    }
    Ok(DeterminantAnalysis { overall, by_owner_type })
}
