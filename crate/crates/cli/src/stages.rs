use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sustain_core::config::{PipelineConfig, SelectionMode};
use sustain_core::corpus::{compute_percentile_thresholds, label_sustained, lifetime_metrics, select_projects};
use sustain_core::determinants::{bonferroni_threshold, build_determinant_table, glyph, DeterminantAnalysis};
use sustain_core::explain::{explain_batch, TrainStats};
use sustain_core::features::{extract_all, Dimension, FeatureVector};
use sustain_core::ingest::{load_corpus, parse_profiles, window_events, EventFormat, IngestError, ProjectEventLog, Profiles};
use sustain_core::learner::{
    ablation_run, baseline_logreg_cv, kfold_cv, train as fit, BoostedEnsemble, EvalReport, GridParams, Matrix,
};
use sustain_core::roles::{assign_roles, RoleAssignment, RoleOptions};
use sustain_core::synth::{generate, SynthConfig};
use sustain_core::tables::{self, Provenance, TableError};

use crate::error::CliError;
use crate::Common;

pub struct Context {
    cfg: PipelineConfig,
    out: PathBuf,
    dimension: Dimension,
}

const GRID_M: [u32; 3] = [1, 3, 5];
const GRID_T: [u32; 2] = [1, 2];
const GRID_K: [u32; 3] = [1, 2, 6];

impl Context {
    pub fn new(cfg: PipelineConfig, common: &Common) -> Result<Self, CliError> {
        let dimension = match &common.dimension {
            None => Dimension::All,
            Some(d) => Dimension::parse(d).ok_or_else(|| {
                let known: Vec<&str> = Dimension::ALL.iter().map(|d| d.as_str()).collect();
                CliError::invalid("config", format!("unknown dimension {d:?}; expected one of {}", known.join(", ")))
            })?,
        };
        let out = cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        Ok(Context { cfg, out, dimension })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn provenance(&self) -> Provenance {
        let p = &self.cfg.params;
        Provenance::new(p.m, p.t, p.k, p.seed)
    }
}

fn ingest_error(stage: &'static str, e: IngestError) -> CliError {
    match e {
        IngestError::Io { path, source } => CliError::Io { stage, path, source },
        other => CliError::invalid(stage, other),
    }
}

fn table_error(stage: &'static str, path: &Path, e: TableError) -> CliError {
    match e {
        TableError::Io(source) => CliError::io(stage, path, source),
        other => CliError::invalid(stage, format!("{}: {other}", path.display())),
    }
}

fn required<'a>(stage: &'static str, p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::invalid(stage, format!("missing --{flag} (or paths.{flag} in the config)")))
}

fn create(stage: &'static str, path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(stage, dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(stage, path, e))
}

fn open(stage: &'static str, path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(stage, path, e))
}

fn write_json<T: Serialize>(stage: &'static str, path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(stage, path)?;
    let text = serde_json::to_string_pretty(value).expect("artifact serializes");
    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| CliError::io(stage, path, e))
}

fn read_json<T: DeserializeOwned>(stage: &'static str, path: &Path) -> Result<T, CliError> {
    serde_json::from_reader(open(stage, path)?)
        .map_err(|e| CliError::invalid(stage, format!("{}: {e}", path.display())))
}

fn write_table<F>(stage: &'static str, path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), TableError>,
{
    let mut w = create(stage, path)?;
    f(&mut w).map_err(|e| table_error(stage, path, e))?;
    w.flush().map_err(|e| CliError::io(stage, path, e))
}

fn load_logs(ctx: &Context, stage: &'static str) -> Result<Vec<ProjectEventLog>, CliError> {
    let events = required(stage, &ctx.cfg.paths.events, "events")?;
    let projects = required(stage, &ctx.cfg.paths.projects, "projects")?;
    load_corpus(events, EventFormat::from_path(events), projects).map_err(|e| ingest_error(stage, e))
}

fn load_profiles(ctx: &Context, stage: &'static str) -> Result<Profiles, CliError> {
    let path = required(stage, &ctx.cfg.paths.profiles, "profiles")?;
    parse_profiles(path).map_err(|e| ingest_error(stage, e))
}

/// Logs restricted to `selected.csv` when a `select` run left one.
fn selected_logs(ctx: &Context, stage: &'static str) -> Result<Vec<ProjectEventLog>, CliError> {
    let logs = load_logs(ctx, stage)?;
    let path = ctx.path("selected.csv");
    if !path.exists() {
        return Ok(logs);
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(open(stage, &path)?);
    let mut keep = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::invalid(stage, format!("{}: {e}", path.display())))?;
        keep.insert(rec[0].to_string());
    }
    Ok(logs.into_iter().filter(|l| keep.contains(&l.project_id)).collect())
}

pub fn synth(ctx: &Context, n_projects: Option<usize>) -> Result<(), CliError> {
    let p = &ctx.cfg.params;
    let cfg = SynthConfig {
        n_projects: n_projects.unwrap_or(ctx.cfg.synth.n_projects),
        seed: p.seed,
        m: p.m,
        t: p.t,
        k: p.k,
        ..ctx.cfg.synth.clone()
    };
    let corpus = generate(&cfg).map_err(|e| CliError::invalid("synth", e))?;
    corpus.write(&ctx.out).map_err(|e| match e {
        sustain_core::synth::SynthError::Io { path, source } => CliError::Io { stage: "synth", path, source },
        other => CliError::invalid("synth", other),
    })?;
    println!("synth: {} projects written to {}", corpus.logs.len(), ctx.out.display());
    Ok(())
}

pub fn select(ctx: &Context) -> Result<(), CliError> {
    let logs = load_logs(ctx, "select")?;
    let sel = &ctx.cfg.selection;
    let thresholds = match sel.mode {
        SelectionMode::Fixed => sel.thresholds.clone(),
        SelectionMode::Percentile => {
            let pct = compute_percentile_thresholds(&logs, sel.percentile).map_err(|e| CliError::invalid("select", e))?;
            sustain_core::corpus::SelectionThresholds {
                min_span_days: sel.thresholds.min_span_days,
                created_after: sel.thresholds.created_after,
                created_before: sel.thresholds.created_before,
                ..pct
            }
        }
    };
    let kept = select_projects(&logs, &thresholds);
    let th = &thresholds;
    let prov = Provenance { seed: None, ..ctx.provenance() }
        .with("min_commits", th.min_commits)
        .with("min_prs", th.min_prs)
        .with("min_issues", th.min_issues)
        .with("min_forks", th.min_forks)
        .with("min_stars", th.min_stars)
        .with("min_span_days", th.min_span_days);
    let path = ctx.path("selected.csv");
    write_table("select", &path, |w| {
        writeln!(w, "{}", prov.line())?;
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["project_id", "commits", "prs", "issues", "forks", "stars", "span_days"])?;
        for log in &kept {
            let m = lifetime_metrics(log);
            wtr.write_record([
                log.project_id.clone(),
                m.commits.to_string(),
                m.prs.to_string(),
                m.issues.to_string(),
                m.forks.to_string(),
                m.stars.to_string(),
                m.span_days.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    println!("select: kept {} of {} projects", kept.len(), logs.len());
    Ok(())
}

fn labels_for(logs: &[ProjectEventLog], t: u32, k: u32) -> Result<Vec<(String, sustain_core::corpus::SustainedLabel)>, CliError> {
    logs.iter()
        .map(|log| {
            label_sustained(log, t, k)
                .map(|l| (log.project_id.clone(), l))
                .map_err(|e| CliError::invalid("label", format!("project {}: {e}", log.project_id)))
        })
        .collect()
}

pub fn label(ctx: &Context) -> Result<(), CliError> {
    let logs = selected_logs(ctx, "label")?;
    let p = &ctx.cfg.params;
    let rows = labels_for(&logs, p.t, p.k)?;
    let prov = Provenance { seed: None, ..ctx.provenance() };
    write_table("label", &ctx.path("labels.csv"), |w| tables::write_labels(w, &prov, &rows))?;
    let pos = rows.iter().filter(|(_, l)| l.status == 1).count();
    println!("label: {pos} of {} projects sustained (t={}, k={})", rows.len(), p.t, p.k);
    Ok(())
}

type Featurized = Vec<(String, RoleAssignment, FeatureVector)>;

fn featurize_logs(ctx: &Context, logs: &[ProjectEventLog], profiles: &Profiles, m: u32) -> Result<Featurized, CliError> {
    let role_opts = RoleOptions::default();
    logs.par_iter()
        .map(|log| {
            let win = window_events(log, m);
            let ctx_err = |e: &dyn std::fmt::Display| CliError::invalid("featurize", format!("project {}: {e}", log.project_id));
            let roles = assign_roles(&win, &role_opts).map_err(|e| ctx_err(&e))?;
            let features = extract_all(&win, &roles, profiles, &ctx.cfg.features).map_err(|e| ctx_err(&e))?;
            Ok((log.project_id.clone(), roles, features))
        })
        .collect()
}

pub fn featurize(ctx: &Context) -> Result<(), CliError> {
    let logs = selected_logs(ctx, "featurize")?;
    let profiles = load_profiles(ctx, "featurize")?;
    let rows = featurize_logs(ctx, &logs, &profiles, ctx.cfg.params.m)?;
    let prov = Provenance { t: None, k: None, seed: None, ..ctx.provenance() };
    let roles: Vec<(String, RoleAssignment)> = rows.iter().map(|(id, r, _)| (id.clone(), r.clone())).collect();
    let feats: Vec<(String, FeatureVector)> = rows.into_iter().map(|(id, _, f)| (id, f)).collect();
    write_table("featurize", &ctx.path("roles.csv"), |w| tables::write_roles(w, &prov, &roles))?;
    write_table("featurize", &ctx.path("features.csv"), |w| tables::write_features(w, &prov, &feats))?;
    println!("featurize: {} projects, window {} months", feats.len(), ctx.cfg.params.m);
    Ok(())
}

fn read_features(ctx: &Context, stage: &'static str) -> Result<Vec<(String, FeatureVector)>, CliError> {
    let path = ctx.path("features.csv");
    tables::read_features(open(stage, &path)?).map_err(|e| table_error(stage, &path, e))
}

fn read_labels(ctx: &Context, stage: &'static str) -> Result<BTreeMap<String, u8>, CliError> {
    let path = ctx.path("labels.csv");
    tables::read_labels(open(stage, &path)?).map_err(|e| table_error(stage, &path, e))
}

fn joined(stage: &'static str, feats: &[(String, FeatureVector)], labels: &BTreeMap<String, u8>) -> Result<(Matrix, Vec<u8>), CliError> {
    let mut rows = Vec::with_capacity(feats.len());
    let mut y = Vec::with_capacity(feats.len());
    for (id, f) in feats {
        let status = labels.get(id).ok_or_else(|| CliError::invalid(stage, format!("project {id} has features but no label")))?;
        rows.push(f.values.clone());
        y.push(*status);
    }
    let x = Matrix::from_rows(&rows).map_err(|e| CliError::invalid(stage, e))?;
    Ok((x, y))
}

fn training_data(ctx: &Context, stage: &'static str) -> Result<(Vec<(String, FeatureVector)>, Matrix, Vec<u8>), CliError> {
    let feats = read_features(ctx, stage)?;
    let labels = read_labels(ctx, stage)?;
    let (x, y) = joined(stage, &feats, &labels)?;
    Ok((feats, x, y))
}

pub fn train(ctx: &Context) -> Result<(), CliError> {
    let (_, x, y) = training_data(ctx, "train")?;
    let model = fit(&x, &y, &ctx.cfg.train).map_err(|e| CliError::invalid("train", e))?;
    write_json("train", &ctx.path("model.json"), &model)?;
    write_json("train", &ctx.path("train_stats.json"), &TrainStats::from_matrix(&x))?;
    println!("train: {} trees on {} projects", model.trees.len(), x.rows());
    Ok(())
}

fn grid_params(ctx: &Context) -> GridParams {
    let p = &ctx.cfg.params;
    GridParams { m: p.m, t: p.t, k: p.k }
}

pub fn evaluate(ctx: &Context, grid: bool, ablations: bool) -> Result<(), CliError> {
    if grid {
        return evaluate_grid(ctx);
    }
    let (_, x, y) = training_data(ctx, "evaluate")?;
    let p = &ctx.cfg.params;
    let invalid = |e| CliError::invalid("evaluate", e);
    let dims: Vec<Dimension> = if ablations { Dimension::ALL.to_vec() } else { vec![ctx.dimension] };
    let mut reports = Vec::new();
    for d in dims {
        let mut r = ablation_run(&x, &y, d, &ctx.cfg.train, p.folds, p.seed).map_err(invalid)?;
        r.params = Some(grid_params(ctx));
        reports.push(r);
    }
    let (_, mut base) = baseline_logreg_cv(&x, &y, &ctx.cfg.logreg, p.folds, p.seed).map_err(invalid)?;
    base.params = Some(grid_params(ctx));
    base.dimension = Some(Dimension::All.as_str().to_string());
    reports.push(base);
    let prov = ctx.provenance().with("folds", p.folds);
    write_table("evaluate", &ctx.path("eval.csv"), |w| tables::write_eval(w, &prov, &reports))?;
    write_json("evaluate", &ctx.path("eval.json"), &reports)?;
    for r in &reports {
        println!(
            "evaluate: {:<20} {:<18} auc {:.3} precision {:.3} recall {:.3}",
            r.model,
            r.dimension.as_deref().unwrap_or("all"),
            r.auc,
            r.precision,
            r.recall
        );
    }
    Ok(())
}

fn evaluate_grid(ctx: &Context) -> Result<(), CliError> {
    let logs = selected_logs(ctx, "evaluate")?;
    let profiles = load_profiles(ctx, "evaluate")?;
    let p = &ctx.cfg.params;
    let mut reports = Vec::new();
    for m in GRID_M {
        let feats = featurize_logs(ctx, &logs, &profiles, m)?;
        let rows: Vec<Vec<f64>> = feats.iter().map(|(_, _, f)| f.values.clone()).collect();
        let x = Matrix::from_rows(&rows).map_err(|e| CliError::invalid("evaluate", e))?;
        for t in GRID_T {
            for k in GRID_K {
                let labels = labels_for(&logs, t, k)?;
                let y: Vec<u8> = labels.iter().map(|(_, l)| l.status).collect();
                let mut r = kfold_cv(&x, &y, &ctx.cfg.train, p.folds, p.seed)
                    .unwrap_or_else(|e| EvalReport::failed("boosted_trees", e));
                r.dimension = Some(Dimension::All.as_str().to_string());
                r.params = Some(GridParams { m, t, k });
                reports.push(r);
            }
        }
    }
    let prov = Provenance { m: None, t: None, k: None, ..ctx.provenance() }.with("folds", p.folds);
    write_table("evaluate", &ctx.path("eval_grid.csv"), |w| tables::write_eval(w, &prov, &reports))?;
    write_json("evaluate", &ctx.path("eval_grid.json"), &reports)?;
    println!("evaluate: grid of {} cells written", reports.len());
    Ok(())
}

pub fn explain(ctx: &Context) -> Result<(), CliError> {
    let model: BoostedEnsemble = read_json("explain", &ctx.path("model.json"))?;
    let stats: TrainStats = read_json("explain", &ctx.path("train_stats.json"))?;
    let feats = read_features(ctx, "explain")?;
    let instances: Vec<(String, Vec<f64>)> = feats.into_iter().map(|(id, f)| (id, f.values)).collect();
    let out = explain_batch(&model, &instances, &stats, &ctx.cfg.explain).map_err(|e| CliError::invalid("explain", e))?;
    let e = &ctx.cfg.explain;
    let prov = ctx
        .provenance()
        .with("n_samples", e.n_samples)
        .with("ridge_alpha", e.ridge_alpha)
        .with("representation", serde_json::to_value(e.representation).expect("enum").as_str().unwrap_or(""));
    write_table("explain", &ctx.path("explanations.csv"), |w| tables::write_explanations(w, &prov, &out))?;
    let mean_fid = out.iter().map(|e| e.fidelity).sum::<f64>() / out.len().max(1) as f64;
    println!("explain: {} projects, mean local fidelity {mean_fid:.3}", out.len());
    Ok(())
}

pub fn analyze(ctx: &Context) -> Result<(), CliError> {
    let feats = read_features(ctx, "analyze")?;
    let path = ctx.path("explanations.csv");
    let ex = tables::read_explanations(open("analyze", &path)?).map_err(|e| table_error("analyze", &path, e))?;
    let features: BTreeMap<String, Vec<f64>> = feats.into_iter().map(|(id, f)| (id, f.values)).collect();
    let coefs: BTreeMap<String, Vec<f64>> = ex.into_iter().map(|e| (e.project_id, e.coefficients)).collect();
    let analysis = build_determinant_table(&features, &coefs, 0.05).map_err(|e| CliError::invalid("analyze", e))?;
    let prov = ctx.provenance();
    write_table("analyze", &ctx.path("determinants.csv"), |w| tables::write_determinants(w, &prov, &analysis.overall))?;
    for t in &analysis.by_owner_type {
        let name = format!("determinants_{}.csv", t.stratum);
        write_table("analyze", &ctx.path(&name), |w| tables::write_determinants(w, &prov, t))?;
    }
    write_json("analyze", &ctx.path("determinants.json"), &analysis)?;
    let o = &analysis.overall;
    let sig = o.records.iter().filter(|r| r.significant).count();
    println!("analyze: {sig} of {} tested variables significant at p < {}", o.n_tests, o.threshold);
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

pub fn report(ctx: &Context) -> Result<(), CliError> {
    let analysis: DeterminantAnalysis = read_json("report", &ctx.path("determinants.json"))?;
    let eval_path = ctx.path("eval.json");
    let evals: Vec<EvalReport> = if eval_path.exists() { read_json("report", &eval_path)? } else { Vec::new() };
    let grid_path = ctx.path("eval_grid.json");
    let grid: Vec<EvalReport> = if grid_path.exists() { read_json("report", &grid_path)? } else { Vec::new() };

    let mut md = String::new();
    let p = &ctx.cfg.params;
    md.push_str(&format!("{}\n\n", ctx.provenance().line().trim_start_matches("# ")));
    md.push_str(&format!("# Sustained activity report (m={}, t={}, k={})\n\n", p.m, p.t, p.k));
    if !evals.is_empty() {
        md.push_str("## Evaluation\n\n| model | dimension | AUC | precision | recall |\n|---|---|---|---|---|\n");
        for r in &evals {
            md.push_str(&format!(
                "| {} | {} | {:.2} | {:.2} | {:.2} |\n",
                r.model,
                r.dimension.as_deref().unwrap_or("all"),
                r.auc,
                r.precision,
                r.recall
            ));
        }
        md.push('\n');
    }
    if !grid.is_empty() {
        md.push_str("## Parameter grid\n\n| m | t | k | AUC | precision | recall | note |\n|---|---|---|---|---|---|---|\n");
        for r in &grid {
            let g = r.params.unwrap_or(GridParams { m: 0, t: 0, k: 0 });
            md.push_str(&format!(
                "| {} | {} | {} | {:.2} | {:.2} | {:.2} | {} |\n",
                g.m,
                g.t,
                g.k,
                r.auc,
                r.precision,
                r.recall,
                r.note.as_deref().unwrap_or("")
            ));
        }
        md.push('\n');
    }
    for table in std::iter::once(&analysis.overall).chain(&analysis.by_owner_type) {
        md.push_str(&format!(
            "## Determinants ({} projects: {})\n\n{} tests, Bonferroni threshold p < {}\n\n",
            table.stratum, table.n_projects, table.n_tests, table.threshold
        ));
        md.push_str("| variable | definition | negative median/mean | positive median/mean | r | effect | significant |\n|---|---|---|---|---|---|---|\n");
        for r in &table.records {
            md.push_str(&format!(
                "| {} | {} | {}/{} | {}/{} | {} | {} | {} |\n",
                r.variable,
                r.definition,
                fmt_opt(r.negative.map(|g| g.median)),
                fmt_opt(r.negative.map(|g| g.mean)),
                fmt_opt(r.positive.map(|g| g.median)),
                fmt_opt(r.positive.map(|g| g.mean)),
                fmt_opt(r.r),
                glyph(r.direction, r.magnitude),
                if r.significant { "yes" } else { "no" }
            ));
        }
        md.push('\n');
    }
    let path = ctx.path("report.md");
    let mut w = create("report", &path)?;
    w.write_all(md.as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io("report", &path, e))?;
    println!("report: Bonferroni threshold for 64 tests = {}", bonferroni_threshold(64, 0.05));
    println!("report: written to {}", path.display());
    Ok(())
}
