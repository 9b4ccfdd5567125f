//! Event, project and participant data model plus observation windows.
//!
//! A project's history is a [`ProjectEventLog`]: every actor-attributed event
//! that happened on the project, kept sorted by time, together with the
//! project-level snapshot values (owner type, README size, issue counts, ...)
//! observed at the feature cutoff. Participant histories across the whole
//! platform live in [`ParticipantProfile`]s keyed by actor id.

mod io;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    load_corpus, parse_event_log, parse_profiles, parse_projects, read_events, read_profiles,
    read_projects, write_events, write_profiles, write_projects, EventFormat,
};

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const DAYS_PER_MONTH: i64 = 30;
pub const SECONDS_PER_MONTH: i64 = DAYS_PER_MONTH * SECONDS_PER_DAY;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("input contains no rows")]
    EmptyInput,
    #[error(
        "duplicate event in project {project_id}: actor {actor_id}, {kind} at {timestamp} (sequence {sequence_no})"
    )]
    DuplicateEvent {
        project_id: String,
        actor_id: String,
        kind: EventKind,
        timestamp: i64,
        sequence_no: u64,
    },
    #[error("duplicate profile for actor {0}")]
    DuplicateActor(String),
    #[error("profile of actor {actor_id} violates an invariant: {reason}")]
    InvariantViolation { actor_id: String, reason: String },
    #[error("duplicate project row for {0}")]
    DuplicateProject(String),
    #[error("project {0} has events but no row in the projects table")]
    MissingProject(String),
    #[error("project {0} is listed in the projects table but has no events")]
    ProjectWithoutEvents(String),
    #[error("event log for project {0} is empty")]
    EmptyLog(String),
    #[error("event for project {found} placed in the log of project {expected}")]
    ForeignEvent { expected: String, found: String },
    #[error("negative timestamp {0}")]
    NegativeTimestamp(i64),
}

impl IngestError {
    pub fn is_io(&self) -> bool {
        matches!(self, IngestError::Io { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Commit,
    PullRequest,
    IssueOpened,
    IssueComment,
    CommitComment,
    IssueEvent,
    Star,
    Fork,
    MemberAdded,
    GfiLabel,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::Commit,
        EventKind::PullRequest,
        EventKind::IssueOpened,
        EventKind::IssueComment,
        EventKind::CommitComment,
        EventKind::IssueEvent,
        EventKind::Star,
        EventKind::Fork,
        EventKind::MemberAdded,
        EventKind::GfiLabel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Commit => "commit",
            EventKind::PullRequest => "pull_request",
            EventKind::IssueOpened => "issue_opened",
            EventKind::IssueComment => "issue_comment",
            EventKind::CommitComment => "commit_comment",
            EventKind::IssueEvent => "issue_event",
            EventKind::Star => "star",
            EventKind::Fork => "fork",
            EventKind::MemberAdded => "member_added",
            EventKind::GfiLabel => "gfi_label",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown event kind {s:?}"))
    }
}

/// One timestamped, actor-attributed activity on a project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub project_id: String,
    pub actor_id: String,
    pub kind: EventKind,
    /// UTC seconds since the Unix epoch.
    pub timestamp: i64,
    pub issue_id: Option<String>,
    pub sequence_no: u64,
}

impl Event {
    pub fn new(project_id: &str, actor_id: &str, kind: EventKind, timestamp: i64) -> Self {
        Event {
            project_id: project_id.to_string(),
            actor_id: actor_id.to_string(),
            kind,
            timestamp,
            issue_id: None,
            sequence_no: 0,
        }
    }

    pub fn with_sequence(mut self, sequence_no: u64) -> Self {
        self.sequence_no = sequence_no;
        self
    }

    pub fn with_issue(mut self, issue_id: &str) -> Self {
        self.issue_id = Some(issue_id.to_string());
        self
    }

    fn order_key(&self) -> (i64, u64, EventKind, &str) {
        (self.timestamp, self.sequence_no, self.kind, &self.actor_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OwnerType {
    Organization,
    #[default]
    User,
}

impl OwnerType {
    /// Numeric code used in the feature vector: organization 0, user 1.
    pub fn code(self) -> u8 {
        match self {
            OwnerType::Organization => 0,
            OwnerType::User => 1,
        }
    }
}

/// Project-level values observed at the feature cutoff, plus selection flags.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProjectSnapshot {
    pub owner_type: OwnerType,
    pub is_fork: bool,
    pub is_deleted: bool,
    pub readme_lines: u64,
    pub contributing_lines: u64,
    pub open_issues: u64,
    pub closed_issues: u64,
    pub gfi: u64,
    pub stars: u64,
    pub forks: u64,
    pub members: u64,
}

/// Time-ordered history of one project.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectEventLog {
    pub project_id: String,
    events: Vec<Event>,
    created_at: i64,
    observed_until: Option<i64>,
    pub snapshot: ProjectSnapshot,
}

impl ProjectEventLog {
    /// Builds a log, sorting the events and checking the uniqueness of
    /// `(actor, kind, timestamp, sequence_no)`.
    ///
    /// `created_at` is the earliest commit; a log without commits falls back
    /// to its earliest event.
    pub fn new(
        project_id: impl Into<String>,
        mut events: Vec<Event>,
        snapshot: ProjectSnapshot,
    ) -> Result<Self, IngestError> {
        let project_id = project_id.into();
        if events.is_empty() {
            return Err(IngestError::EmptyLog(project_id));
        }
        for e in &events {
            if e.project_id != project_id {
                return Err(IngestError::ForeignEvent {
                    expected: project_id,
                    found: e.project_id.clone(),
                });
            }
            if e.timestamp < 0 {
                return Err(IngestError::NegativeTimestamp(e.timestamp));
            }
        }
        events.sort_by(|a, b| a.order_key().cmp(&b.order_key()));

        let mut seen = HashSet::with_capacity(events.len());
        for e in &events {
            if !seen.insert((&e.actor_id, e.kind, e.timestamp, e.sequence_no)) {
                return Err(IngestError::DuplicateEvent {
                    project_id,
                    actor_id: e.actor_id.clone(),
                    kind: e.kind,
                    timestamp: e.timestamp,
                    sequence_no: e.sequence_no,
                });
            }
        }

        let created_at = events
            .iter()
            .find(|e| e.kind == EventKind::Commit)
            .unwrap_or(&events[0])
            .timestamp;

        Ok(ProjectEventLog {
            project_id,
            events,
            created_at,
            observed_until: None,
            snapshot,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn created_at(&self) -> i64 {
        self.created_at
    }

    /// Exclusive end of the observation window, if this log has been windowed.
    pub fn observed_until(&self) -> Option<i64> {
        self.observed_until
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn commit_times(&self) -> impl Iterator<Item = i64> + '_ {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Commit)
            .map(|e| e.timestamp)
    }
}

/// Restricts a log to `[created_at, created_at + months * 30 days)`.
///
/// The snapshot and `created_at` carry through unchanged; an empty window is
/// valid. Windowing an already windowed log never extends it.
pub fn window_events(log: &ProjectEventLog, months: u32) -> ProjectEventLog {
    let mut end = log.created_at + i64::from(months) * SECONDS_PER_MONTH;
    if let Some(prev) = log.observed_until {
        end = end.min(prev);
    }
    let events = log
        .events
        .iter()
        .filter(|e| e.timestamp >= log.created_at && e.timestamp < end)
        .cloned()
        .collect();
    ProjectEventLog {
        project_id: log.project_id.clone(),
        events,
        created_at: log.created_at,
        observed_until: Some(end),
        snapshot: log.snapshot.clone(),
    }
}

/// A participant's platform-wide history at the cutoff.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub actor_id: String,
    pub commits_all: u64,
    pub prs_all: u64,
    pub issues_all: u64,
    pub owned_projects: u64,
    pub owned_projects_1yr: u64,
    pub owned_projects_2yr: u64,
    pub followers: u64,
    pub following: u64,
    pub starred_projects: u64,
    pub org_count: u64,
    pub shows_affiliation: bool,
}

impl ParticipantProfile {
    pub fn new(actor_id: impl Into<String>) -> Self {
        ParticipantProfile {
            actor_id: actor_id.into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.owned_projects_1yr > self.owned_projects {
            return Err(IngestError::InvariantViolation {
                actor_id: self.actor_id.clone(),
                reason: format!(
                    "owned_projects_1yr {} exceeds owned_projects {}",
                    self.owned_projects_1yr, self.owned_projects
                ),
            });
        }
        if self.owned_projects_2yr > self.owned_projects_1yr {
            return Err(IngestError::InvariantViolation {
                actor_id: self.actor_id.clone(),
                reason: format!(
                    "owned_projects_2yr {} exceeds owned_projects_1yr {}",
                    self.owned_projects_2yr, self.owned_projects_1yr
                ),
            });
        }
        Ok(())
    }
}

pub type Profiles = BTreeMap<String, ParticipantProfile>;
