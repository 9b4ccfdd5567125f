//! Core / peripheral / non-code split of a project's participants.
//!
//! Committers are ranked by commit count (ties: earlier first commit, then
//! actor id). The core is the shortest prefix of that ranking holding at
//! least 80% of the commits; every other committer is peripheral. Actors with
//! no commits who opened issues, commented, or generated issue events are
//! non-code contributors.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{EventKind, ProjectEventLog};

#[derive(Debug, Error, PartialEq)]
pub enum RolesError {
    #[error("project {0} has no events in the observation window")]
    NoParticipants(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleOptions {
    /// Share of window commits the core must cover.
    pub core_share: f64,
    /// Require strictly more than `core_share` instead of at least.
    pub strict: bool,
    /// Actor ids ending in one of these are dropped from every role.
    pub bot_suffixes: Vec<String>,
}

impl Default for RoleOptions {
    fn default() -> Self {
        RoleOptions {
            core_share: 0.8,
            strict: false,
            bot_suffixes: vec!["[bot]".to_string()],
        }
    }
}

impl RoleOptions {
    pub fn is_bot(&self, actor_id: &str) -> bool {
        self.bot_suffixes.iter().any(|s| actor_id.ends_with(s.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Core,
    Peripheral,
    NonCode,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Core, Role::Peripheral, Role::NonCode];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Core => "core",
            Role::Peripheral => "peripheral",
            Role::NonCode => "noncode",
        }
    }

    /// Suffix used in feature names.
    pub fn suffix(self) -> &'static str {
        match self {
            Role::Core => "c",
            Role::Peripheral => "p",
            Role::NonCode => "n",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub core: BTreeSet<String>,
    pub peripheral: BTreeSet<String>,
    pub noncode: BTreeSet<String>,
    /// Actors excluded as bots.
    pub bots: BTreeSet<String>,
}

impl RoleAssignment {
    pub fn members(&self, role: Role) -> &BTreeSet<String> {
        match role {
            Role::Core => &self.core,
            Role::Peripheral => &self.peripheral,
            Role::NonCode => &self.noncode,
        }
    }

    pub fn role_of(&self, actor_id: &str) -> Option<Role> {
        Role::ALL
            .into_iter()
            .find(|&r| self.members(r).contains(actor_id))
    }
}

fn is_noncode_activity(kind: EventKind) -> bool {
    matches!(
        kind,
        EventKind::IssueOpened
            | EventKind::IssueComment
            | EventKind::CommitComment
            | EventKind::IssueEvent
    )
}

pub fn assign_roles(
    window: &ProjectEventLog,
    opts: &RoleOptions,
) -> Result<RoleAssignment, RolesError> {
    if window.events().is_empty() {
        return Err(RolesError::NoParticipants(window.project_id.clone()));
    }

    let mut out = RoleAssignment::default();
    // actor -> (commits, first commit time)
    let mut committers: BTreeMap<&str, (u64, i64)> = BTreeMap::new();
    let mut talkers: BTreeSet<&str> = BTreeSet::new();
    for e in window.events() {
        if opts.is_bot(&e.actor_id) {
            out.bots.insert(e.actor_id.clone());
            continue;
        }
        if e.kind == EventKind::Commit {
            let entry = committers.entry(&e.actor_id).or_insert((0, e.timestamp));
            entry.0 += 1;
            entry.1 = entry.1.min(e.timestamp);
        } else if is_noncode_activity(e.kind) {
            talkers.insert(&e.actor_id);
        }
    }

    let mut ranked: Vec<(&str, u64, i64)> =
        committers.iter().map(|(&a, &(n, first))| (a, n, first)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)).then(a.0.cmp(b.0)));

    let total: u64 = ranked.iter().map(|r| r.1).sum();
    let target = opts.core_share * total as f64;
    let tol = 1e-9 * total.max(1) as f64;
    let mut covered = 0u64;
    let mut in_core = true;
    for (actor, n, _) in &ranked {
        if in_core {
            out.core.insert(actor.to_string());
            covered += n;
            let c = covered as f64;
            let reached = if opts.strict { c > target + tol } else { c >= target - tol };
            if reached {
                in_core = false;
            }
        } else {
            out.peripheral.insert(actor.to_string());
        }
    }

    out.noncode = talkers
        .into_iter()
        .filter(|a| !committers.contains_key(a))
        .map(str::to_string)
        .collect();
    Ok(out)
}
