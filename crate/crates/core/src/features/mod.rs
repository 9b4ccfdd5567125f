//! The 64 early-participation variables.
//!
//! 54 variables describe participation (willingness, capacity, opportunity)
//! and 10 are controls. Role-level variables are averages over the members of
//! one role group; suffix `_c`, `_p`, `_n` marks core, peripheral and
//! non-code contributors. [`FEATURE_NAMES`] fixes the canonical column order
//! used in every table and model.

mod extract;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{
    capacity_features, control_features, extract_all, opportunity_features, willingness_features,
    FeatureOptions, MissingProfilePolicy, PartialFeatures,
};

pub const N_FEATURES: usize = 64;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    // willingness: cumulative effort and concentration, core
    "#cmt_c",
    "#pr_c",
    "#issue_c",
    "#iss_comment_c",
    "#cmt_comment_c",
    "#iss_event_c",
    "#following_c",
    "#star_pro_c",
    // peripheral
    "#cmt_p",
    "#pr_p",
    "#issue_p",
    "#iss_comment_p",
    "#cmt_comment_p",
    "#iss_event_p",
    "#following_p",
    "#star_pro_p",
    // non-code
    "#issue_n",
    "#iss_comment_n",
    "#cmt_comment_n",
    "#iss_event_n",
    "#following_n",
    "#star_pro_n",
    // stability of effort
    "#cmt_actday",
    "#cmt_median",
    "#cmt_front",
    "#cmt_end",
    "cmt_day_std",
    "cmt_dev_std",
    // capacity: general experience and popularity
    "#cmt_all_c",
    "#pr_all_c",
    "#issue_all_c",
    "#pro_c",
    "#pro_oneyear_c",
    "#pro_twoyear_c",
    "#follower_c",
    "#cmt_all_p",
    "#pr_all_p",
    "#issue_all_p",
    "#pro_p",
    "#pro_oneyear_p",
    "#pro_twoyear_p",
    "#follower_p",
    "#cmt_all_n",
    "#pr_all_n",
    "#issue_all_n",
    "#pro_n",
    "#pro_oneyear_n",
    "#pro_twoyear_n",
    "#follower_n",
    // opportunity
    "#iss_open",
    "iss_open_ratio",
    "#GFI",
    "#line_readme",
    "#line_contributing",
    // controls
    "show_comp_c",
    "#org_c",
    "show_comp_p",
    "#org_p",
    "show_comp_n",
    "#org_n",
    "type",
    "#star",
    "#fork",
    "#member",
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&n| n == name)
}

/// One-line meaning of each variable, used in the determinant table.
pub fn definition(name: &str) -> String {
    let (stem, role) = match name.rsplit_once('_') {
        Some((stem, r @ ("c" | "p" | "n"))) => (stem, r),
        _ => (name, ""),
    };
    let group = match role {
        "c" => " (core developers)",
        "p" => " (peripheral developers)",
        "n" => " (non-code contributors)",
        _ => "",
    };
    let base = match stem {
        "#cmt" => "Mean window commits per member",
        "#pr" => "Mean window pull requests per member",
        "#issue" => "Mean window issues opened per member",
        "#iss_comment" => "Mean window issue comments per member",
        "#cmt_comment" => "Mean window commit comments per member",
        "#iss_event" => "Mean window issue events per member",
        "#following" => "Mean number of accounts followed",
        "#star_pro" => "Mean number of starred repositories",
        "#cmt_actday" => "Days in the window with at least one commit",
        "#cmt_median" => "Median commits per window day",
        "#cmt_front" => "Commits in the first half of the window",
        "#cmt_end" => "Commits in the second half of the window",
        "cmt_day_std" => "Standard deviation of commits per window day",
        "cmt_dev_std" => "Standard deviation of commits per committer",
        "#cmt_all" => "Mean platform-wide commits",
        "#pr_all" => "Mean platform-wide pull requests",
        "#issue_all" => "Mean platform-wide issues opened",
        "#pro" => "Mean number of owned repositories",
        "#pro_oneyear" => "Mean owned repositories with one-year sustained activity",
        "#pro_twoyear" => "Mean owned repositories with two-year sustained activity",
        "#follower" => "Mean number of followers",
        "#iss_open" => "Open issues at the cutoff",
        "iss_open_ratio" => "Share of issues still open at the cutoff",
        "#GFI" => "Good-first-issue labelled issues at the cutoff",
        "#line_readme" => "Lines in README.md",
        "#line_contributing" => "Lines in CONTRIBUTING.md",
        "show_comp" => "Share of members listing an affiliation",
        "#org" => "Mean number of organizations joined",
        "type" => "Owner account type (0 organization, 1 user)",
        "#star" => "Stars at the cutoff",
        "#fork" => "Forks at the cutoff",
        "#member" => "Members at the cutoff",
        _ => "",
    };
    if base.is_empty() {
        String::new()
    } else {
        format!("{base}{group}")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("no profile for actor {0}")]
    MissingProfile(String),
    #[error("project {0} was not cut to an observation window")]
    NotWindowed(String),
    #[error("feature {0} produced more than once")]
    DuplicateFeature(String),
    #[error("feature {0} missing from the assembled vector")]
    MissingFeature(String),
    #[error("unknown feature name {0}")]
    UnknownFeature(String),
}

/// All 64 variables of one project, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Whether the core, peripheral and non-code groups were empty. Kept as
    /// metadata only; not a model input.
    pub empty_groups: [bool; 3],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }
}

/// Column groups used for dimension-isolated models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    CumulativeEffort,
    Stability,
    Concentration,
    OssExperience,
    Popularity,
    Opportunity,
    Control,
    /// Variables already studied in earlier sustainability work.
    Common,
    /// Everything outside `Common`.
    Other,
    All,
}

const COMMON: [&str; 8] = [
    "#cmt_c",
    "#cmt_p",
    "#issue_c",
    "#issue_p",
    "#issue_n",
    "#cmt_actday",
    "type",
    "#member",
];

impl Dimension {
    pub const ALL: [Dimension; 10] = [
        Dimension::CumulativeEffort,
        Dimension::Stability,
        Dimension::Concentration,
        Dimension::OssExperience,
        Dimension::Popularity,
        Dimension::Opportunity,
        Dimension::Control,
        Dimension::Common,
        Dimension::Other,
        Dimension::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::CumulativeEffort => "cumulative_effort",
            Dimension::Stability => "stability",
            Dimension::Concentration => "concentration",
            Dimension::OssExperience => "oss_experience",
            Dimension::Popularity => "popularity",
            Dimension::Opportunity => "opportunity",
            Dimension::Control => "control",
            Dimension::Common => "common",
            Dimension::Other => "other",
            Dimension::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Dimension> {
        Dimension::ALL.into_iter().find(|d| d.as_str() == s)
    }

    fn contains(self, name: &str) -> bool {
        let stem = name
            .strip_suffix("_c")
            .or_else(|| name.strip_suffix("_p"))
            .or_else(|| name.strip_suffix("_n"))
            .unwrap_or(name);
        match self {
            Dimension::CumulativeEffort => matches!(
                stem,
                "#cmt" | "#pr" | "#issue" | "#iss_comment" | "#cmt_comment" | "#iss_event"
            ),
            Dimension::Stability => matches!(
                name,
                "#cmt_actday" | "#cmt_median" | "#cmt_front" | "#cmt_end" | "cmt_day_std" | "cmt_dev_std"
            ),
            Dimension::Concentration => matches!(stem, "#following" | "#star_pro"),
            Dimension::OssExperience => matches!(
                stem,
                "#cmt_all" | "#pr_all" | "#issue_all" | "#pro" | "#pro_oneyear" | "#pro_twoyear"
            ),
            Dimension::Popularity => stem == "#follower",
            Dimension::Opportunity => matches!(
                name,
                "#iss_open" | "iss_open_ratio" | "#GFI" | "#line_readme" | "#line_contributing"
            ),
            Dimension::Control => {
                matches!(stem, "show_comp" | "#org") || matches!(name, "type" | "#star" | "#fork" | "#member")
            }
            Dimension::Common => COMMON.contains(&name),
            Dimension::Other => !COMMON.contains(&name),
            Dimension::All => true,
        }
    }

    /// Canonical column indices belonging to this dimension, ascending.
    pub fn columns(self) -> Vec<usize> {
        FEATURE_NAMES
            .iter()
            .enumerate()
            .filter(|(_, n)| self.contains(n))
            .map(|(i, _)| i)
            .collect()
    }
}
