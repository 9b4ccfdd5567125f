//! Project selection and sustained-activity labels.
//!
//! Selection keeps non-fork, non-deleted projects created inside a date range
//! whose lifetime activity clears per-metric thresholds. A project has
//! `t`-year sustained activity when its commits span more than `t` years and
//! the median number of commits per 30-day month is at least `k`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{EventKind, ProjectEventLog, SECONDS_PER_DAY, SECONDS_PER_MONTH};
use crate::stats;

/// 2012-01-01T00:00:00Z
pub const DEFAULT_CREATED_AFTER: i64 = 1_325_376_000;
/// 2019-03-31T23:59:59Z
pub const DEFAULT_CREATED_BEFORE: i64 = 1_554_076_799;
pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("percentile must lie strictly between 0 and 1, got {0}")]
    InvalidPercentile(f64),
    #[error("project {0} has no commits")]
    NoCommits(String),
    #[error("invalid labelling parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionThresholds {
    pub min_commits: u64,
    pub min_prs: u64,
    pub min_issues: u64,
    pub min_forks: u64,
    pub min_stars: u64,
    pub min_span_days: f64,
    pub created_after: i64,
    pub created_before: i64,
}

impl Default for SelectionThresholds {
    /// 57 commits, 4 PRs, 1 issue, 1 fork and 2 stars, a three-month minimum
    /// commit span and projects created from 2012 through March 2019.
    fn default() -> Self {
        SelectionThresholds {
            min_commits: 57,
            min_prs: 4,
            min_issues: 1,
            min_forks: 1,
            min_stars: 2,
            min_span_days: 90.0,
            created_after: DEFAULT_CREATED_AFTER,
            created_before: DEFAULT_CREATED_BEFORE,
        }
    }
}

impl SelectionThresholds {
    /// Thresholds that only enforce the fork/deleted/date-range rules.
    pub fn zero() -> Self {
        SelectionThresholds {
            min_commits: 0,
            min_prs: 0,
            min_issues: 0,
            min_forks: 0,
            min_stars: 0,
            min_span_days: 0.0,
            ..Default::default()
        }
    }
}

/// Whole-history activity of one project, the inputs to selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeMetrics {
    pub commits: u64,
    pub prs: u64,
    pub issues: u64,
    pub forks: u64,
    pub stars: u64,
    /// Days between the first and last commit; 0 without commits.
    pub span_days: f64,
}

pub fn lifetime_metrics(log: &ProjectEventLog) -> LifetimeMetrics {
    let mut m = LifetimeMetrics {
        commits: 0,
        prs: 0,
        issues: 0,
        forks: 0,
        stars: 0,
        span_days: 0.0,
    };
    let mut first = None;
    let mut last = None;
    for e in log.events() {
        match e.kind {
            EventKind::Commit => {
                m.commits += 1;
                first.get_or_insert(e.timestamp);
                last = Some(e.timestamp);
            }
            EventKind::PullRequest => m.prs += 1,
            EventKind::IssueOpened => m.issues += 1,
            EventKind::Fork => m.forks += 1,
            EventKind::Star => m.stars += 1,
            _ => {}
        }
    }
    if let (Some(f), Some(l)) = (first, last) {
        m.span_days = (l - f) as f64 / SECONDS_PER_DAY as f64;
    }
    m
}

/// Nearest-rank percentile: the smallest observed value `v` such that at least
/// `percentile` of the values are `<= v`.
fn nearest_rank(values: &mut [u64], percentile: f64) -> u64 {
    values.sort_unstable();
    let n = values.len();
    // guard against 0.95 * 100 landing a hair above 95
    let rank = ((percentile * n as f64) - 1e-9).ceil() as usize;
    values[rank.clamp(1, n) - 1]
}

/// Derives the count thresholds from a reference corpus. Span and date-range
/// fields keep their defaults.
pub fn compute_percentile_thresholds(
    corpus: &[ProjectEventLog],
    percentile: f64,
) -> Result<SelectionThresholds, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(CorpusError::InvalidPercentile(percentile));
    }
    let metrics: Vec<LifetimeMetrics> = corpus.iter().map(lifetime_metrics).collect();
    let column = |f: fn(&LifetimeMetrics) -> u64| {
        let mut v: Vec<u64> = metrics.iter().map(f).collect();
        nearest_rank(&mut v, percentile)
    };
    Ok(SelectionThresholds {
        min_commits: column(|m| m.commits),
        min_prs: column(|m| m.prs),
        min_issues: column(|m| m.issues),
        min_forks: column(|m| m.forks),
        min_stars: column(|m| m.stars),
        ..Default::default()
    })
}

pub fn passes_selection(log: &ProjectEventLog, th: &SelectionThresholds) -> bool {
    if log.snapshot.is_fork || log.snapshot.is_deleted {
        return false;
    }
    let created = log.created_at();
    if created < th.created_after || created > th.created_before {
        return false;
    }
    let m = lifetime_metrics(log);
    m.commits >= th.min_commits
        && m.prs >= th.min_prs
        && m.issues >= th.min_issues
        && m.forks >= th.min_forks
        && m.stars >= th.min_stars
        && m.span_days >= th.min_span_days
}

pub fn select_projects<'a>(
    corpus: &'a [ProjectEventLog],
    thresholds: &SelectionThresholds,
) -> Vec<&'a ProjectEventLog> {
    corpus
        .iter()
        .filter(|log| passes_selection(log, thresholds))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelOptions {
    /// Count months without commits (between the first and last commit)
    /// when taking the median.
    pub include_empty_months: bool,
}

impl Default for LabelOptions {
    fn default() -> Self {
        LabelOptions {
            include_empty_months: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SustainedLabel {
    pub status: u8,
    pub t: u32,
    pub k: u32,
    pub active_span_days: f64,
    pub median_monthly_commits: f64,
}

pub fn label_sustained(
    log: &ProjectEventLog,
    t: u32,
    k: u32,
) -> Result<SustainedLabel, CorpusError> {
    label_sustained_with(log, t, k, LabelOptions::default())
}

pub fn label_sustained_with(
    log: &ProjectEventLog,
    t: u32,
    k: u32,
    opts: LabelOptions,
) -> Result<SustainedLabel, CorpusError> {
    if t < 1 || k < 1 {
        return Err(CorpusError::InvalidParameter(format!(
            "t and k must be at least 1 (t={t}, k={k})"
        )));
    }
    let commits: Vec<i64> = log.commit_times().collect();
    let (Some(&first), Some(&last)) = (commits.first(), commits.last()) else {
        return Err(CorpusError::NoCommits(log.project_id.clone()));
    };

    let n_buckets = ((last - first) / SECONDS_PER_MONTH) as usize + 1;
    let mut buckets = vec![0u32; n_buckets];
    for ts in &commits {
        buckets[((ts - first) / SECONDS_PER_MONTH) as usize] += 1;
    }
    let counts: Vec<f64> = buckets
        .into_iter()
        .filter(|&c| opts.include_empty_months || c > 0)
        .map(f64::from)
        .collect();
    let median_monthly_commits = stats::median(&counts).unwrap_or(0.0);
    let active_span_days = (last - first) as f64 / SECONDS_PER_DAY as f64;

    let sustained = active_span_days > f64::from(t) * DAYS_PER_YEAR
        && median_monthly_commits >= f64::from(k);
    Ok(SustainedLabel {
        status: u8::from(sustained),
        t,
        k,
        active_span_days,
        median_monthly_commits,
    })
}
