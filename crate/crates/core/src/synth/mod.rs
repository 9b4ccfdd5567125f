//! Seeded synthetic corpora with known ground truth.
//!
//! Each project gets a team, a commit regime for its observation window,
//! other window activity, participant profiles and a snapshot. Features are
//! extracted from the generated window exactly as for real data, the label
//! is drawn from a logistic model over the planted variables of those
//! features, and post-window commit history consistent with the label is
//! appended so that the labeler recovers it.
//!
//! Seeds: project `i` uses `derive_indexed(seed, "project", i)` for its
//! window and `derive_indexed(seed, "history", i)` for its continuation;
//! labels use `derive(seed, "labels")` in project order.

mod regime;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Binomial, Distribution, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{extract_all, feature_index, FeatureOptions, FeatureVector};
use crate::ingest::{write_events, write_profiles, write_projects, EventFormat};
use crate::ingest::{
    window_events, Event, EventKind, IngestError, OwnerType, ParticipantProfile, ProjectEventLog,
    ProjectSnapshot, Profiles, SECONDS_PER_DAY, SECONDS_PER_MONTH,
};
use crate::roles::{assign_roles, RoleOptions};
use crate::seeds;
pub use regime::{regime_stream, Regime};
use regime::poisson;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeMix {
    pub steady: f64,
    pub front_loaded: f64,
    pub bursty: f64,
}

impl Default for RegimeMix {
    fn default() -> Self {
        RegimeMix { steady: 0.4, front_loaded: 0.3, bursty: 0.3 }
    }
}

/// Poisson means of team sizes. The core always has at least one member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSize {
    pub extra_core: f64,
    pub peripheral: f64,
    pub noncode: f64,
}

impl Default for TeamSize {
    fn default() -> Self {
        TeamSize { extra_core: 1.0, peripheral: 3.0, noncode: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_projects: usize,
    pub seed: u64,
    /// Variable name to signed strength per standard deviation of
    /// `ln(1 + value)`.
    pub planted_effects: BTreeMap<String, f64>,
    pub regime_mix: RegimeMix,
    pub team: TeamSize,
    /// Standard deviation of the Gaussian noise added to the label logit.
    pub noise: f64,
    pub intercept: f64,
    /// Median window commits per day.
    pub commit_rate: f64,
    pub m: u32,
    pub t: u32,
    pub k: u32,
}

/// Six planted variables: four raising and two lowering the odds.
pub fn default_planted_effects() -> BTreeMap<String, f64> {
    [
        ("#cmt_actday", 1.5),
        ("#follower_c", 1.5),
        ("#iss_comment_n", 1.5),
        ("#pro_oneyear_c", 1.5),
        ("#following_c", -1.5),
        ("#star_pro_c", -1.5),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Variables drawn independently of everything else.
pub const NOISE_VARIABLES: [&str; 5] = ["#line_readme", "#GFI", "#star", "#fork", "type"];

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_projects: 200,
            seed: 0,
            planted_effects: default_planted_effects(),
            regime_mix: RegimeMix::default(),
            team: TeamSize::default(),
            noise: 0.5,
            intercept: 0.0,
            commit_rate: 0.8,
            m: 3,
            t: 1,
            k: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_projects == 0 {
            return bad("n_projects must be at least 1".into());
        }
        let mix = &self.regime_mix;
        let parts = [mix.steady, mix.front_loaded, mix.bursty];
        if parts.iter().any(|&p| !(p >= 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("regime fractions must be non-negative and sum to 1".into());
        }
        for name in self.planted_effects.keys() {
            if feature_index(name).is_none() {
                return bad(format!("unknown planted variable {name}"));
            }
        }
        if !(self.noise >= 0.0) || !(self.commit_rate > 0.0) {
            return bad("noise must be non-negative and commit_rate positive".into());
        }
        let t = &self.team;
        if [t.extra_core, t.peripheral, t.noncode].iter().any(|&v| !(v >= 0.0)) {
            return bad("team size means must be non-negative".into());
        }
        if self.m == 0 || self.t == 0 || self.k == 0 {
            return bad("m, t and k must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    pub strength: f64,
    pub sign: i8,
    /// Corpus mean and standard deviation of `ln(1 + value)`.
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub m: u32,
    pub t: u32,
    pub k: u32,
    pub noise: f64,
    pub intercept: f64,
    pub planted: BTreeMap<String, PlantedEffect>,
    pub noise_variables: Vec<String>,
    pub labels: BTreeMap<String, u8>,
    pub regimes: BTreeMap<String, Regime>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub logs: Vec<ProjectEventLog>,
    pub profiles: Profiles,
    /// Window features the labels were drawn from, in `logs` order.
    pub features: Vec<FeatureVector>,
    pub truth: GroundTruth,
}

struct Draft {
    id: String,
    created: i64,
    events: Vec<Event>,
    profiles: Vec<ParticipantProfile>,
    snapshot: ProjectSnapshot,
    features: FeatureVector,
    regime: Regime,
    core: Vec<String>,
}

const CREATED_FROM: i64 = 1_325_376_000; // 2012-01-01
const CREATED_SPAN_DAYS: i64 = 5 * 365;

fn lognormal<R: Rng>(rng: &mut R, median: f64, sigma: f64) -> f64 {
    LogNormal::new(median.ln(), sigma).expect("valid lognormal").sample(rng)
}

fn profile<R: Rng>(rng: &mut R, id: &str) -> ParticipantProfile {
    let owned = poisson(rng, 8.0);
    let one = Binomial::new(owned, 0.3).expect("valid binomial").sample(rng);
    let two = Binomial::new(one, 0.5).expect("valid binomial").sample(rng);
    ParticipantProfile {
        actor_id: id.to_string(),
        commits_all: lognormal(rng, 300.0, 1.2) as u64,
        prs_all: lognormal(rng, 30.0, 1.2) as u64,
        issues_all: lognormal(rng, 20.0, 1.2) as u64,
        owned_projects: owned,
        owned_projects_1yr: one,
        owned_projects_2yr: two,
        followers: lognormal(rng, 20.0, 1.2) as u64,
        following: lognormal(rng, 10.0, 1.0) as u64,
        starred_projects: lognormal(rng, 15.0, 1.2) as u64,
        org_count: poisson(rng, 1.5),
        shows_affiliation: rng.random_bool(0.4),
    }
}

fn pick_regime<R: Rng>(rng: &mut R, mix: &RegimeMix) -> Regime {
    let u: f64 = rng.random();
    if u < mix.steady {
        Regime::Steady
    } else if u < mix.steady + mix.front_loaded {
        Regime::FrontLoaded
    } else {
        Regime::Bursty
    }
}

fn draft_project(cfg: &SynthConfig, index: usize) -> Result<Draft, SynthError> {
    let seed = seeds::derive_indexed(cfg.seed, "project", index as u64);
    let mut rng = seeds::rng(seed);
    let id = format!("p{index:06}");
    let created = CREATED_FROM + rng.random_range(0..CREATED_SPAN_DAYS * SECONDS_PER_DAY);
    let window = i64::from(cfg.m) * SECONDS_PER_MONTH;
    let window_days = window as f64 / SECONDS_PER_DAY as f64;

    let n_core = 1 + poisson(&mut rng, cfg.team.extra_core) as usize;
    let n_periph = poisson(&mut rng, cfg.team.peripheral) as usize;
    let n_noncode = poisson(&mut rng, cfg.team.noncode) as usize;
    let core: Vec<String> = (0..n_core).map(|i| format!("{id}-c{i}")).collect();
    let periph: Vec<String> = (0..n_periph).map(|i| format!("{id}-p{i}")).collect();
    let noncode: Vec<String> = (0..n_noncode).map(|i| format!("{id}-n{i}")).collect();
    let devs: Vec<&String> = core.iter().chain(&periph).collect();

    let mut events = Vec::new();
    let mut seq = 0u64;
    let mut push = |events: &mut Vec<Event>, actor: &str, kind: EventKind, ts: i64| {
        events.push(Event::new(&id, actor, kind, ts).with_sequence(seq));
        seq += 1;
    };

    // commits
    let regime = pick_regime(&mut rng, &cfg.regime_mix);
    let mut rate = lognormal(&mut rng, cfg.commit_rate, 0.6);
    if regime == Regime::FrontLoaded {
        // same expected total as the other regimes
        rate /= 0.55;
    }
    let mut times = regime_stream(regime, rate, window_days, seeds::derive(seed, "commits"));
    times.insert(0, 0);
    let weights: Vec<f64> = devs
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let base: f64 = rng.random_range(0.2..1.0);
            if i < n_core { 4.0 * base } else { 0.5 * base }
        })
        .collect();
    let chooser = WeightedIndex::new(&weights).expect("positive weights");
    for (j, off) in times.iter().enumerate() {
        let author = if j == 0 { 0 } else { chooser.sample(&mut rng) };
        push(&mut events, devs[author], EventKind::Commit, created + off);
    }

    let at = |rng: &mut rand_chacha::ChaCha8Rng| created + rng.random_range(0..window);
    let engagement = lognormal(&mut rng, 1.0, 0.7);
    let mut prs = 0;
    for (i, d) in devs.iter().enumerate() {
        let n = poisson(&mut rng, if i < n_core { 2.0 } else { 1.0 });
        for _ in 0..n {
            push(&mut events, d, EventKind::PullRequest, at(&mut rng));
        }
        prs += n;
        for (kind, mean) in [
            (EventKind::IssueOpened, 0.5),
            (EventKind::IssueComment, 3.0),
            (EventKind::CommitComment, 1.0),
            (EventKind::IssueEvent, 2.0),
        ] {
            for _ in 0..poisson(&mut rng, mean) {
                push(&mut events, d, kind, at(&mut rng));
            }
        }
    }
    while prs < 4 {
        push(&mut events, &core[0], EventKind::PullRequest, at(&mut rng));
        prs += 1;
    }
    for n in &noncode {
        for (kind, mean) in [
            (EventKind::IssueOpened, 1.0),
            (EventKind::IssueComment, 2.0),
            (EventKind::CommitComment, 0.3),
            (EventKind::IssueEvent, 0.5),
        ] {
            for _ in 0..poisson(&mut rng, mean * engagement) {
                push(&mut events, n, kind, at(&mut rng));
            }
        }
    }
    let issues = events.iter().filter(|e| e.kind == EventKind::IssueOpened).count() as u64;
    if issues == 0 {
        push(&mut events, &core[0], EventKind::IssueOpened, at(&mut rng));
    }
    let issues = issues.max(1);

    // snapshot; readme, GFI, stars, forks and owner type are pure noise
    let closed = Binomial::new(issues, 0.6).expect("valid binomial").sample(&mut rng);
    let snapshot = ProjectSnapshot {
        owner_type: if rng.random_bool(0.5) { OwnerType::User } else { OwnerType::Organization },
        is_fork: false,
        is_deleted: false,
        readme_lines: lognormal(&mut rng, 40.0, 0.9) as u64,
        contributing_lines: if rng.random_bool(0.3) { lognormal(&mut rng, 30.0, 0.8) as u64 } else { 0 },
        open_issues: issues - closed,
        closed_issues: closed,
        gfi: poisson(&mut rng, 1.0),
        stars: 2 + lognormal(&mut rng, 10.0, 1.2) as u64,
        forks: 1 + lognormal(&mut rng, 3.0, 1.0) as u64,
        members: n_core as u64,
    };
    for i in 0..snapshot.stars {
        push(&mut events, &format!("{id}-s{i}"), EventKind::Star, at(&mut rng));
    }
    for i in 0..snapshot.forks {
        push(&mut events, &format!("{id}-f{i}"), EventKind::Fork, at(&mut rng));
    }
    for i in 0..snapshot.gfi {
        push(&mut events, &core[0], EventKind::GfiLabel, at(&mut rng) + i as i64 % 2);
    }
    for c in &core {
        push(&mut events, c, EventKind::MemberAdded, at(&mut rng));
    }

    let profiles: Vec<ParticipantProfile> =
        core.iter().chain(&periph).chain(&noncode).map(|a| profile(&mut rng, a)).collect();
    let by_id: Profiles = profiles.iter().map(|p| (p.actor_id.clone(), p.clone())).collect();

    let log = ProjectEventLog::new(id.clone(), events.clone(), snapshot.clone())?;
    let win = window_events(&log, cfg.m);
    let roles = assign_roles(&win, &RoleOptions::default()).expect("window has a commit");
    let features = extract_all(&win, &roles, &by_id, &FeatureOptions::default())
        .expect("every participant has a profile");

    Ok(Draft { id, created, events, profiles, snapshot, features, regime, core })
}

/// Commits after the window: sustained projects keep at least `k` commits
/// in every 30-day month until past `t` years; others stop before `t` years.
fn continue_history(cfg: &SynthConfig, index: usize, draft: &mut Draft, status: u8) {
    let mut rng = seeds::rng(seeds::derive_indexed(cfg.seed, "history", index as u64));
    let month = SECONDS_PER_MONTH;
    let window_end = draft.created + i64::from(cfg.m) * month;
    let year = 365 * SECONDS_PER_DAY;
    let horizon = i64::from(cfg.t) * year;
    let mut seq = draft.events.iter().map(|e| e.sequence_no).max().unwrap_or(0) + 1;
    let mut times = Vec::new();
    let end;
    if status == 1 {
        end = draft.created + horizon + rng.random_range(31..400) * SECONDS_PER_DAY;
        let mut start = window_end;
        while start < end {
            let stop = (start + month).min(end);
            for _ in 0..u64::from(cfg.k) + poisson(&mut rng, 2.0) {
                times.push(rng.random_range(start..stop));
            }
            start += month;
        }
        times.push(end - 1);
    } else {
        let earliest = (window_end + SECONDS_PER_DAY).max(draft.created + 91 * SECONDS_PER_DAY);
        end = rng.random_range(earliest..draft.created + horizon - SECONDS_PER_DAY);
        for _ in 0..poisson(&mut rng, 0.3 * (end - window_end) as f64 / SECONDS_PER_DAY as f64) {
            times.push(rng.random_range(window_end..end));
        }
        times.push(end);
    }
    let window_commits = draft.events.iter().filter(|e| e.kind == EventKind::Commit).count();
    while window_commits + times.len() < 57 {
        times.push(rng.random_range(window_end..end));
    }
    times.sort_unstable();
    for ts in times {
        let author = &draft.core[rng.random_range(0..draft.core.len())];
        draft.events.push(Event::new(&draft.id, author, EventKind::Commit, ts).with_sequence(seq));
        seq += 1;
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    cfg.validate()?;
    let mut drafts: Vec<Draft> = (0..cfg.n_projects)
        .into_par_iter()
        .map(|i| draft_project(cfg, i))
        .collect::<Result<_, _>>()?;

    let mut planted = BTreeMap::new();
    let mut logit = vec![cfg.intercept; drafts.len()];
    for (name, &strength) in &cfg.planted_effects {
        let col = feature_index(name).expect("validated");
        let vals: Vec<f64> = drafts.iter().map(|d| d.features.values[col].max(0.0).ln_1p()).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        let std = var.sqrt();
        if std > 0.0 {
            for (l, v) in logit.iter_mut().zip(&vals) {
                *l += strength * (v - mean) / std;
            }
        }
        let sign = if strength > 0.0 { 1 } else if strength < 0.0 { -1 } else { 0 };
        planted.insert(name.clone(), PlantedEffect { strength, sign, mean, std });
    }
    let mut rng = seeds::rng(seeds::derive(cfg.seed, "labels"));
    let noise = Normal::new(0.0, cfg.noise).expect("valid noise");
    let statuses: Vec<u8> = logit
        .iter()
        .map(|&l| u8::from(rng.random::<f64>() < sigmoid(l + noise.sample(&mut rng))))
        .collect();

    drafts
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, d)| continue_history(cfg, i, d, statuses[i]));

    let mut logs = Vec::with_capacity(drafts.len());
    let mut profiles = Profiles::new();
    let mut features = Vec::with_capacity(drafts.len());
    let mut labels = BTreeMap::new();
    let mut regimes = BTreeMap::new();
    for (d, status) in drafts.into_iter().zip(statuses) {
        labels.insert(d.id.clone(), status);
        regimes.insert(d.id.clone(), d.regime);
        for p in d.profiles {
            profiles.insert(p.actor_id.clone(), p);
        }
        features.push(d.features);
        logs.push(ProjectEventLog::new(d.id, d.events, d.snapshot)?);
    }
    Ok(SynthCorpus {
        logs,
        profiles,
        features,
        truth: GroundTruth {
            seed: cfg.seed,
            m: cfg.m,
            t: cfg.t,
            k: cfg.k,
            noise: cfg.noise,
            intercept: cfg.intercept,
            planted,
            noise_variables: NOISE_VARIABLES.iter().map(|s| s.to_string()).collect(),
            labels,
            regimes,
        },
    })
}

impl SynthCorpus {
    /// Writes `events.csv`, `projects.csv`, `profiles.csv` and
    /// `ground_truth.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), SynthError> {
        let io = |path: &Path| {
            let p = path.display().to_string();
            move |source| SynthError::Io { path: p, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let create = |name: &str| {
            let path = dir.join(name);
            File::create(&path).map(BufWriter::new).map_err(io(&path))
        };
        write_events(create("events.csv")?, &self.logs, EventFormat::Csv)?;
        write_projects(create("projects.csv")?, &self.logs)?;
        write_profiles(create("profiles.csv")?, &self.profiles)?;
        let truth = serde_json::to_string_pretty(&self.truth).expect("truth serializes");
        let path = dir.join("ground_truth.json");
        std::fs::write(&path, truth + "\n").map_err(io(&path))
    }
}
