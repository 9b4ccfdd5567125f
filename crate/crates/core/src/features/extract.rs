use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureVector, FEATURE_NAMES, N_FEATURES};
use crate::ingest::{
    EventKind, ParticipantProfile, ProjectEventLog, ProjectSnapshot, Profiles, SECONDS_PER_DAY,
};
use crate::roles::{Role, RoleAssignment};
use crate::stats;

/// Named values produced by one feature family.
pub type PartialFeatures = Vec<(&'static str, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingProfilePolicy {
    #[default]
    Error,
    /// Treat actors without a profile as having all-zero history.
    ZeroFill,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureOptions {
    pub missing_profile: MissingProfilePolicy,
    /// `iss_open_ratio` for projects without any issue.
    pub empty_issue_ratio: f64,
}

const ROLE_ACTIVITY: [(&str, EventKind); 6] = [
    ("#cmt", EventKind::Commit),
    ("#pr", EventKind::PullRequest),
    ("#issue", EventKind::IssueOpened),
    ("#iss_comment", EventKind::IssueComment),
    ("#cmt_comment", EventKind::CommitComment),
    ("#iss_event", EventKind::IssueEvent),
];

/// Looks up each member's profile according to the missing-profile policy.
fn group_profiles<'a>(
    members: &BTreeSet<String>,
    profiles: &'a Profiles,
    opts: &FeatureOptions,
) -> Result<Vec<Option<&'a ParticipantProfile>>, FeatureError> {
    members
        .iter()
        .map(|a| match profiles.get(a) {
            Some(p) => Ok(Some(p)),
            None => match opts.missing_profile {
                MissingProfilePolicy::Error => Err(FeatureError::MissingProfile(a.clone())),
                MissingProfilePolicy::ZeroFill => Ok(None),
            },
        })
        .collect()
}

/// Mean of `field` over a group; 0 for an empty group.
fn profile_mean(group: &[Option<&ParticipantProfile>], field: fn(&ParticipantProfile) -> f64) -> f64 {
    if group.is_empty() {
        return 0.0;
    }
    group.iter().map(|p| p.map_or(0.0, field)).sum::<f64>() / group.len() as f64
}

fn role_name(stem: &str, role: Role) -> &'static str {
    let full = format!("{stem}_{}", role.suffix());
    FEATURE_NAMES
        .iter()
        .copied()
        .find(|&n| n == full)
        .unwrap_or_else(|| panic!("no feature named {full}"))
}

/// Per-role contribution counts, concentration, and stability of effort.
pub fn willingness_features(
    window: &ProjectEventLog,
    roles: &RoleAssignment,
    profiles: &Profiles,
    opts: &FeatureOptions,
) -> Result<PartialFeatures, FeatureError> {
    let end = window
        .observed_until()
        .ok_or_else(|| FeatureError::NotWindowed(window.project_id.clone()))?;
    let start = window.created_at();

    let mut per_actor: BTreeMap<&str, [u64; 6]> = BTreeMap::new();
    for e in window.events() {
        if roles.bots.contains(&e.actor_id) {
            continue;
        }
        if let Some(slot) = ROLE_ACTIVITY.iter().position(|(_, k)| *k == e.kind) {
            per_actor.entry(&e.actor_id).or_default()[slot] += 1;
        }
    }

    let mut out = PartialFeatures::with_capacity(28);
    for role in Role::ALL {
        let members = roles.members(role);
        let n = members.len();
        for (slot, (stem, _)) in ROLE_ACTIVITY.iter().enumerate() {
            // non-code contributors have no commits or pull requests by definition
            if role == Role::NonCode && slot < 2 {
                continue;
            }
            let total: u64 = members
                .iter()
                .map(|a| per_actor.get(a.as_str()).map_or(0, |c| c[slot]))
                .sum();
            let avg = if n == 0 { 0.0 } else { total as f64 / n as f64 };
            out.push((role_name(stem, role), avg));
        }
        let group = group_profiles(members, profiles, opts)?;
        out.push((role_name("#following", role), profile_mean(&group, |p| p.following as f64)));
        out.push((role_name("#star_pro", role), profile_mean(&group, |p| p.starred_projects as f64)));
    }

    out.extend(stability(window, roles, start, end));
    Ok(out)
}

fn stability(window: &ProjectEventLog, roles: &RoleAssignment, start: i64, end: i64) -> PartialFeatures {
    let commits: Vec<(&str, i64)> = window
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::Commit && !roles.bots.contains(&e.actor_id))
        .map(|e| (e.actor_id.as_str(), e.timestamp))
        .collect();

    // calendar UTC days overlapping [start, end)
    let first_day = start.div_euclid(SECONDS_PER_DAY);
    let last_day = (end - 1).max(start).div_euclid(SECONDS_PER_DAY);
    let mut per_day = vec![0.0; (last_day - first_day + 1) as usize];
    let mid = start + (end - start) / 2;
    let (mut front, mut back) = (0.0, 0.0);
    let mut per_dev: BTreeMap<&str, f64> = BTreeMap::new();
    for &(actor, ts) in &commits {
        per_day[(ts.div_euclid(SECONDS_PER_DAY) - first_day) as usize] += 1.0;
        if ts < mid {
            front += 1.0;
        } else {
            back += 1.0;
        }
        *per_dev.entry(actor).or_default() += 1.0;
    }
    let active_days = per_day.iter().filter(|&&c| c > 0.0).count() as f64;
    let dev_counts: Vec<f64> = per_dev.into_values().collect();

    vec![
        ("#cmt_actday", active_days),
        ("#cmt_median", stats::median(&per_day).unwrap_or(0.0)),
        ("#cmt_front", front),
        ("#cmt_end", back),
        ("cmt_day_std", stats::population_std(&per_day).unwrap_or(0.0)),
        ("cmt_dev_std", stats::population_std(&dev_counts).unwrap_or(0.0)),
    ]
}

/// Per-role means of platform-wide experience and popularity.
pub fn capacity_features(
    roles: &RoleAssignment,
    profiles: &Profiles,
    opts: &FeatureOptions,
) -> Result<PartialFeatures, FeatureError> {
    let fields: [(&str, fn(&ParticipantProfile) -> f64); 7] = [
        ("#cmt_all", |p| p.commits_all as f64),
        ("#pr_all", |p| p.prs_all as f64),
        ("#issue_all", |p| p.issues_all as f64),
        ("#pro", |p| p.owned_projects as f64),
        ("#pro_oneyear", |p| p.owned_projects_1yr as f64),
        ("#pro_twoyear", |p| p.owned_projects_2yr as f64),
        ("#follower", |p| p.followers as f64),
    ];
    let mut out = PartialFeatures::with_capacity(21);
    for role in Role::ALL {
        let group = group_profiles(roles.members(role), profiles, opts)?;
        for (stem, field) in fields {
            out.push((role_name(stem, role), profile_mean(&group, field)));
        }
    }
    Ok(out)
}

pub fn opportunity_features(snapshot: &ProjectSnapshot, opts: &FeatureOptions) -> PartialFeatures {
    let total = snapshot.open_issues + snapshot.closed_issues;
    let ratio = if total == 0 {
        opts.empty_issue_ratio
    } else {
        snapshot.open_issues as f64 / total as f64
    };
    vec![
        ("#iss_open", snapshot.open_issues as f64),
        ("iss_open_ratio", ratio),
        ("#GFI", snapshot.gfi as f64),
        ("#line_readme", snapshot.readme_lines as f64),
        ("#line_contributing", snapshot.contributing_lines as f64),
    ]
}

pub fn control_features(
    roles: &RoleAssignment,
    profiles: &Profiles,
    snapshot: &ProjectSnapshot,
    opts: &FeatureOptions,
) -> Result<PartialFeatures, FeatureError> {
    let mut out = PartialFeatures::with_capacity(10);
    for role in Role::ALL {
        let group = group_profiles(roles.members(role), profiles, opts)?;
        out.push((
            role_name("show_comp", role),
            profile_mean(&group, |p| f64::from(u8::from(p.shows_affiliation))),
        ));
        out.push((role_name("#org", role), profile_mean(&group, |p| p.org_count as f64)));
    }
    out.push(("type", f64::from(snapshot.owner_type.code())));
    out.push(("#star", snapshot.stars as f64));
    out.push(("#fork", snapshot.forks as f64));
    out.push(("#member", snapshot.members as f64));
    Ok(out)
}

/// Assembles the full vector from the four families, checking that every
/// canonical name is produced exactly once.
pub fn extract_all(
    window: &ProjectEventLog,
    roles: &RoleAssignment,
    profiles: &Profiles,
    opts: &FeatureOptions,
) -> Result<FeatureVector, FeatureError> {
    let parts = [
        willingness_features(window, roles, profiles, opts)?,
        capacity_features(roles, profiles, opts)?,
        opportunity_features(&window.snapshot, opts),
        control_features(roles, profiles, &window.snapshot, opts)?,
    ];
    let mut values = vec![None; N_FEATURES];
    for (name, v) in parts.into_iter().flatten() {
        let idx = super::feature_index(name).ok_or_else(|| FeatureError::UnknownFeature(name.into()))?;
        if values[idx].replace(v).is_some() {
            return Err(FeatureError::DuplicateFeature(name.into()));
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| FeatureError::MissingFeature(FEATURE_NAMES[i].into())))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(FeatureVector {
        values,
        empty_groups: [roles.core.is_empty(), roles.peripheral.is_empty(), roles.noncode.is_empty()],
    })
}
