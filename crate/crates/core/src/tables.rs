//! CSV artifacts exchanged between pipeline stages.
//!
//! Every table starts with a provenance comment line
//! `# sustain <version> m=.. t=.. k=.. seed=..` followed by a header row.
//! Readers skip `#` lines. Floats are written in shortest round-trip form so
//! re-reading is lossless.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SustainedLabel;
use crate::determinants::{glyph, DeterminantTable};
use crate::explain::LocalExplanation;
use crate::features::{FeatureVector, FEATURE_NAMES, N_FEATURES};
use crate::learner::EvalReport;
use crate::roles::{Role, RoleAssignment};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum TableError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
}

/// Parameter tuple recorded at the top of every table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub m: Option<u32>,
    pub t: Option<u32>,
    pub k: Option<u32>,
    pub seed: Option<u64>,
    /// Further stage-specific settings, written in insertion order.
    pub extra: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(m: u32, t: u32, k: u32, seed: u64) -> Self {
        Provenance { m: Some(m), t: Some(t), k: Some(k), seed: Some(seed), extra: Vec::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    pub fn line(&self) -> String {
        let mut s = format!("# sustain {VERSION}");
        let fmt = |v: Option<String>| v.unwrap_or_else(|| "-".to_string());
        let _ = write!(
            s,
            " m={} t={} k={} seed={}",
            fmt(self.m.map(|v| v.to_string())),
            fmt(self.t.map(|v| v.to_string())),
            fmt(self.k.map(|v| v.to_string())),
            fmt(self.seed.map(|v| v.to_string())),
        );
        for (k, v) in &self.extra {
            let _ = write!(s, " {k}={v}");
        }
        s
    }
}

fn writer<W: Write>(mut w: W, prov: &Provenance) -> Result<csv::Writer<W>, TableError> {
    writeln!(w, "{}", prov.line())?;
    Ok(csv::Writer::from_writer(w))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn parse_f64(s: &str, line: u64) -> Result<f64, TableError> {
    s.parse().map_err(|_| TableError::Malformed { line, reason: format!("not a number: {s:?}") })
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

pub fn write_labels<W: Write>(w: W, prov: &Provenance, rows: &[(String, SustainedLabel)]) -> Result<(), TableError> {
    let mut wtr = writer(w, prov)?;
    wtr.write_record(["project_id", "status", "t", "k", "active_span_days", "median_monthly_commits"])?;
    for (id, l) in rows {
        wtr.write_record([
            id.clone(),
            l.status.to_string(),
            l.t.to_string(),
            l.k.to_string(),
            num(l.active_span_days),
            num(l.median_monthly_commits),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Project id to status.
pub fn read_labels<R: Read>(r: R) -> Result<BTreeMap<String, u8>, TableError> {
    let mut out = BTreeMap::new();
    for rec in reader(r).records() {
        let rec = rec?;
        let line = line_of(&rec);
        let status = match rec.get(1) {
            Some("0") => 0,
            Some("1") => 1,
            other => return Err(TableError::Malformed { line, reason: format!("bad status {other:?}") }),
        };
        out.insert(rec[0].to_string(), status);
    }
    Ok(out)
}

pub fn write_roles<W: Write>(w: W, prov: &Provenance, rows: &[(String, RoleAssignment)]) -> Result<(), TableError> {
    let mut wtr = writer(w, prov)?;
    wtr.write_record(["project_id", "actor_id", "role"])?;
    for (id, roles) in rows {
        for role in Role::ALL {
            for actor in roles.members(role) {
                wtr.write_record([id.as_str(), actor.as_str(), role.as_str()])?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

const EMPTY_COLUMNS: [&str; 3] = ["empty_core", "empty_peripheral", "empty_noncode"];

pub fn write_features<W: Write>(w: W, prov: &Provenance, rows: &[(String, FeatureVector)]) -> Result<(), TableError> {
    let mut wtr = writer(w, prov)?;
    let mut header = vec!["project_id"];
    header.extend(FEATURE_NAMES);
    header.extend(EMPTY_COLUMNS);
    wtr.write_record(&header)?;
    for (id, f) in rows {
        let mut rec = vec![id.clone()];
        rec.extend(f.values.iter().map(|&v| num(v)));
        rec.extend(f.empty_groups.iter().map(|&b| u8::from(b).to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<(), TableError> {
    let header = rdr.headers()?.clone();
    let got: Vec<&str> = header.iter().collect();
    if got.len() < expected.len() || got[..expected.len()] != *expected {
        return Err(TableError::Malformed { line: 1, reason: "unexpected header".into() });
    }
    Ok(())
}

pub fn read_features<R: Read>(r: R) -> Result<Vec<(String, FeatureVector)>, TableError> {
    let mut rdr = reader(r);
    let mut expected = vec!["project_id"];
    expected.extend(FEATURE_NAMES);
    check_header(&mut rdr, &expected)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() < 1 + N_FEATURES {
            return Err(TableError::Malformed { line, reason: format!("{} fields", rec.len()) });
        }
        let values = (1..=N_FEATURES).map(|i| parse_f64(&rec[i], line)).collect::<Result<Vec<_>, _>>()?;
        let mut empty_groups = [false; 3];
        for (g, slot) in empty_groups.iter_mut().enumerate() {
            *slot = rec.get(1 + N_FEATURES + g) == Some("1");
        }
        out.push((rec[0].to_string(), FeatureVector { values, empty_groups }));
    }
    Ok(out)
}

pub fn write_explanations<W: Write>(w: W, prov: &Provenance, rows: &[LocalExplanation]) -> Result<(), TableError> {
    let mut wtr = writer(w, prov)?;
    let mut header = vec!["project_id"];
    header.extend(FEATURE_NAMES);
    header.extend(["intercept", "fidelity", "seed"]);
    wtr.write_record(&header)?;
    for e in rows {
        let mut rec = vec![e.project_id.clone()];
        rec.extend(e.coefficients.iter().map(|&v| num(v)));
        rec.extend([num(e.intercept), num(e.fidelity), e.seed.to_string()]);
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_explanations<R: Read>(r: R) -> Result<Vec<LocalExplanation>, TableError> {
    let mut rdr = reader(r);
    let mut expected = vec!["project_id"];
    expected.extend(FEATURE_NAMES);
    check_header(&mut rdr, &expected)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != N_FEATURES + 4 {
            return Err(TableError::Malformed { line, reason: format!("{} fields", rec.len()) });
        }
        let coefficients = (1..=N_FEATURES).map(|i| parse_f64(&rec[i], line)).collect::<Result<Vec<_>, _>>()?;
        out.push(LocalExplanation {
            project_id: rec[0].to_string(),
            coefficients,
            intercept: parse_f64(&rec[N_FEATURES + 1], line)?,
            fidelity: parse_f64(&rec[N_FEATURES + 2], line)?,
            n_samples: 0,
            seed: rec[N_FEATURES + 3]
                .parse()
                .map_err(|_| TableError::Malformed { line, reason: "bad seed".into() })?,
        });
    }
    Ok(out)
}

pub fn write_determinants<W: Write>(w: W, prov: &Provenance, table: &DeterminantTable) -> Result<(), TableError> {
    let prov = prov
        .clone()
        .with("stratum", &table.stratum)
        .with("n_tests", table.n_tests)
        .with("threshold", table.threshold);
    let mut wtr = writer(w, &prov)?;
    wtr.write_record([
        "variable", "definition", "n_neg", "n_pos", "n_zero", "median_neg", "mean_neg", "median_pos",
        "mean_pos", "u", "z", "p", "r", "direction", "magnitude", "effect", "significant",
        "small_group", "empty_group",
    ])?;
    for r in &table.records {
        wtr.write_record([
            r.variable.clone(),
            r.definition.clone(),
            r.n_neg.to_string(),
            r.n_pos.to_string(),
            r.n_zero.to_string(),
            opt(r.negative.map(|g| g.median)),
            opt(r.negative.map(|g| g.mean)),
            opt(r.positive.map(|g| g.median)),
            opt(r.positive.map(|g| g.mean)),
            opt(r.test.map(|t| t.u)),
            opt(r.test.map(|t| t.z)),
            opt(r.test.map(|t| t.p)),
            opt(r.r),
            r.direction.as_str().to_string(),
            r.magnitude.as_str().to_string(),
            glyph(r.direction, r.magnitude),
            r.significant.to_string(),
            r.small_group.to_string(),
            r.empty_group.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_eval<W: Write>(w: W, prov: &Provenance, rows: &[EvalReport]) -> Result<(), TableError> {
    let mut wtr = writer(w, prov)?;
    wtr.write_record(["model", "dimension", "m", "t", "k", "folds", "auc", "precision", "recall", "folds_without_positive_predictions", "note"])?;
    for r in rows {
        let p = |f: fn(&crate::learner::GridParams) -> u32| r.params.as_ref().map(f).map(|v| v.to_string()).unwrap_or_default();
        wtr.write_record([
            r.model.clone(),
            r.dimension.clone().unwrap_or_else(|| "all".to_string()),
            p(|g| g.m),
            p(|g| g.t),
            p(|g| g.k),
            r.folds.len().to_string(),
            num(r.auc),
            num(r.precision),
            num(r.recall),
            r.folds.iter().filter(|f| !f.precision_defined).count().to_string(),
            r.note.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
