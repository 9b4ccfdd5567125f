use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Event, EventKind, IngestError, OwnerType, ParticipantProfile, ProjectEventLog, ProjectSnapshot,
    Profiles,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Jsonl,
}

impl EventFormat {
    /// Picks the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => EventFormat::Jsonl,
            _ => EventFormat::Csv,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRow {
    project_id: String,
    actor_id: String,
    kind: String,
    timestamp: i64,
    #[serde(default)]
    issue_id: Option<String>,
    sequence_no: u64,
}

impl EventRow {
    fn into_event(self, line: u64) -> Result<Event, IngestError> {
        let kind: EventKind = self
            .kind
            .parse()
            .map_err(|reason| IngestError::MalformedRow { line, reason })?;
        if self.timestamp < 0 {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("negative timestamp {}", self.timestamp),
            });
        }
        if self.project_id.is_empty() || self.actor_id.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "empty project_id or actor_id".into(),
            });
        }
        Ok(Event {
            project_id: self.project_id,
            actor_id: self.actor_id,
            kind,
            timestamp: self.timestamp,
            issue_id: self.issue_id.filter(|s| !s.is_empty()),
            sequence_no: self.sequence_no,
        })
    }

    fn from_event(e: &Event) -> Self {
        EventRow {
            project_id: e.project_id.clone(),
            actor_id: e.actor_id.clone(),
            kind: e.kind.as_str().to_string(),
            timestamp: e.timestamp,
            issue_id: e.issue_id.clone(),
            sequence_no: e.sequence_no,
        }
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

/// Deserializes every data row, handing each to `f` with its 1-based line number.
fn for_each_row<R, T, F>(reader: R, mut f: F) -> Result<(), IngestError>
where
    R: Read,
    T: serde::de::DeserializeOwned,
    F: FnMut(T, u64) -> Result<(), IngestError>,
{
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(csv_error)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = record
            .deserialize(Some(&headers))
            .map_err(|e| IngestError::MalformedRow {
                line,
                reason: e.to_string(),
            })?;
        f(row, line)?;
    }
    Ok(())
}

fn csv_error(err: csv::Error) -> IngestError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    if let csv::ErrorKind::Io(e) = err.kind() {
        return IngestError::Io {
            path: "<stream>".into(),
            source: std::io::Error::new(e.kind(), e.to_string()),
        };
    }
    IngestError::MalformedRow {
        line,
        reason: err.to_string(),
    }
}

/// Groups events into one log per project, in project id order.
fn group_events(events: Vec<Event>) -> Result<Vec<ProjectEventLog>, IngestError> {
    if events.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut by_project: BTreeMap<String, Vec<Event>> = BTreeMap::new();
    for e in events {
        by_project.entry(e.project_id.clone()).or_default().push(e);
    }
    by_project
        .into_iter()
        .map(|(id, evs)| ProjectEventLog::new(id, evs, ProjectSnapshot::default()))
        .collect()
}

/// Reads an event stream. Snapshots are left at their defaults until joined
/// with a projects table (see [`load_corpus`]).
pub fn read_events<R: Read>(
    reader: R,
    format: EventFormat,
) -> Result<Vec<ProjectEventLog>, IngestError> {
    let mut events = Vec::new();
    match format {
        EventFormat::Csv => {
            for_each_row(reader, |row: EventRow, line| {
                events.push(row.into_event(line)?);
                Ok(())
            })?;
        }
        EventFormat::Jsonl => {
            for (idx, line) in BufReader::new(reader).lines().enumerate() {
                let line_no = idx as u64 + 1;
                let line = line.map_err(|source| IngestError::Io {
                    path: "<stream>".into(),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let row: EventRow =
                    serde_json::from_str(&line).map_err(|e| IngestError::MalformedRow {
                        line: line_no,
                        reason: e.to_string(),
                    })?;
                events.push(row.into_event(line_no)?);
            }
        }
    }
    group_events(events)
}

pub fn parse_event_log(
    path: &Path,
    format: EventFormat,
) -> Result<Vec<ProjectEventLog>, IngestError> {
    read_events(open(path)?, format).map_err(|e| with_path(e, path))
}

fn with_path(err: IngestError, path: &Path) -> IngestError {
    match err {
        IngestError::Io { source, .. } => IngestError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    }
}

pub fn write_events<W: Write>(
    writer: W,
    logs: &[ProjectEventLog],
    format: EventFormat,
) -> Result<(), IngestError> {
    match format {
        EventFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(writer);
            for log in logs {
                for e in log.events() {
                    wtr.serialize(EventRow::from_event(e)).map_err(csv_error)?;
                }
            }
            wtr.flush().map_err(io_error)?;
        }
        EventFormat::Jsonl => {
            let mut w = writer;
            for log in logs {
                for e in log.events() {
                    let line = serde_json::to_string(&EventRow::from_event(e))
                        .expect("event rows always serialize");
                    writeln!(w, "{line}").map_err(io_error)?;
                }
            }
        }
    }
    Ok(())
}

fn io_error(source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: "<stream>".into(),
        source,
    }
}

fn parse_flag(raw: &str, line: u64, column: &str) -> Result<bool, IngestError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" | "f" | "n" => Ok(false),
        "1" | "true" | "yes" | "t" | "y" => Ok(true),
        other => Err(IngestError::MalformedRow {
            line,
            reason: format!("column {column}: expected a boolean, got {other:?}"),
        }),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ProjectRow {
    project_id: String,
    owner_type: String,
    is_fork: String,
    is_deleted: String,
    readme_lines: u64,
    contributing_lines: u64,
    open_issues_at_cutoff: u64,
    closed_issues_at_cutoff: u64,
    gfi_at_cutoff: u64,
    stars_at_cutoff: u64,
    forks_at_cutoff: u64,
    members_at_cutoff: u64,
}

fn parse_owner_type(raw: &str, line: u64) -> Result<OwnerType, IngestError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "0" | "organization" | "org" => Ok(OwnerType::Organization),
        "1" | "user" => Ok(OwnerType::User),
        other => Err(IngestError::MalformedRow {
            line,
            reason: format!("column owner_type: expected 0/1, got {other:?}"),
        }),
    }
}

pub fn read_projects<R: Read>(reader: R) -> Result<BTreeMap<String, ProjectSnapshot>, IngestError> {
    let mut out = BTreeMap::new();
    for_each_row(reader, |row: ProjectRow, line| {
        let snapshot = ProjectSnapshot {
            owner_type: parse_owner_type(&row.owner_type, line)?,
            is_fork: parse_flag(&row.is_fork, line, "is_fork")?,
            is_deleted: parse_flag(&row.is_deleted, line, "is_deleted")?,
            readme_lines: row.readme_lines,
            contributing_lines: row.contributing_lines,
            open_issues: row.open_issues_at_cutoff,
            closed_issues: row.closed_issues_at_cutoff,
            gfi: row.gfi_at_cutoff,
            stars: row.stars_at_cutoff,
            forks: row.forks_at_cutoff,
            members: row.members_at_cutoff,
        };
        if out.insert(row.project_id.clone(), snapshot).is_some() {
            return Err(IngestError::DuplicateProject(row.project_id));
        }
        Ok(())
    })?;
    if out.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(out)
}

pub fn parse_projects(path: &Path) -> Result<BTreeMap<String, ProjectSnapshot>, IngestError> {
    read_projects(open(path)?).map_err(|e| with_path(e, path))
}

pub fn write_projects<W: Write>(writer: W, logs: &[ProjectEventLog]) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for log in logs {
        let s = &log.snapshot;
        wtr.serialize(ProjectRow {
            project_id: log.project_id.clone(),
            owner_type: s.owner_type.code().to_string(),
            is_fork: s.is_fork.to_string(),
            is_deleted: s.is_deleted.to_string(),
            readme_lines: s.readme_lines,
            contributing_lines: s.contributing_lines,
            open_issues_at_cutoff: s.open_issues,
            closed_issues_at_cutoff: s.closed_issues,
            gfi_at_cutoff: s.gfi,
            stars_at_cutoff: s.stars,
            forks_at_cutoff: s.forks,
            members_at_cutoff: s.members,
        })
        .map_err(csv_error)?;
    }
    wtr.flush().map_err(io_error)
}

/// Reads events and the projects table and joins them. Every project must
/// appear in both.
pub fn load_corpus(
    events: &Path,
    format: EventFormat,
    projects: &Path,
) -> Result<Vec<ProjectEventLog>, IngestError> {
    let mut logs = parse_event_log(events, format)?;
    let mut snapshots = parse_projects(projects)?;
    for log in &mut logs {
        log.snapshot = snapshots
            .remove(&log.project_id)
            .ok_or_else(|| IngestError::MissingProject(log.project_id.clone()))?;
    }
    if let Some(id) = snapshots.into_keys().next() {
        return Err(IngestError::ProjectWithoutEvents(id));
    }
    Ok(logs)
}

/// Profile row as it appears on disk: every column but `actor_id` may be
/// absent or empty.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct ProfileRow {
    actor_id: String,
    commits_all: Option<u64>,
    prs_all: Option<u64>,
    issues_all: Option<u64>,
    owned_projects: Option<u64>,
    owned_projects_1yr: Option<u64>,
    owned_projects_2yr: Option<u64>,
    followers: Option<u64>,
    following: Option<u64>,
    starred_projects: Option<u64>,
    org_count: Option<u64>,
    shows_affiliation: Option<String>,
}

pub fn read_profiles<R: Read>(reader: R) -> Result<Profiles, IngestError> {
    let mut out = Profiles::new();
    for_each_row(reader, |row: ProfileRow, line| {
        if row.actor_id.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "empty actor_id".into(),
            });
        }
        let profile = ParticipantProfile {
            actor_id: row.actor_id.clone(),
            commits_all: row.commits_all.unwrap_or(0),
            prs_all: row.prs_all.unwrap_or(0),
            issues_all: row.issues_all.unwrap_or(0),
            owned_projects: row.owned_projects.unwrap_or(0),
            owned_projects_1yr: row.owned_projects_1yr.unwrap_or(0),
            owned_projects_2yr: row.owned_projects_2yr.unwrap_or(0),
            followers: row.followers.unwrap_or(0),
            following: row.following.unwrap_or(0),
            starred_projects: row.starred_projects.unwrap_or(0),
            org_count: row.org_count.unwrap_or(0),
            shows_affiliation: match &row.shows_affiliation {
                Some(s) => parse_flag(s, line, "shows_affiliation")?,
                None => false,
            },
        };
        profile.validate()?;
        if out.insert(row.actor_id.clone(), profile).is_some() {
            return Err(IngestError::DuplicateActor(row.actor_id));
        }
        Ok(())
    })?;
    if out.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(out)
}

pub fn parse_profiles(path: &Path) -> Result<Profiles, IngestError> {
    read_profiles(open(path)?).map_err(|e| with_path(e, path))
}

pub fn write_profiles<W: Write>(writer: W, profiles: &Profiles) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for p in profiles.values() {
        wtr.serialize(ProfileRow {
            actor_id: p.actor_id.clone(),
            commits_all: Some(p.commits_all),
            prs_all: Some(p.prs_all),
            issues_all: Some(p.issues_all),
            owned_projects: Some(p.owned_projects),
            owned_projects_1yr: Some(p.owned_projects_1yr),
            owned_projects_2yr: Some(p.owned_projects_2yr),
            followers: Some(p.followers),
            following: Some(p.following),
            starred_projects: Some(p.starred_projects),
            org_count: Some(p.org_count),
            shows_affiliation: Some(p.shows_affiliation.to_string()),
        })
        .map_err(csv_error)?;
    }
    wtr.flush().map_err(io_error)
}
