//! `sustain`: run the sustained-activity pipeline stage by stage.

mod error;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sustain_core::config::PipelineConfig;

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "sustain", version, about = "Predict and explain long-term sustained activity of open-source projects")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every stage. Each overrides the config key of the same name.
#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Event stream (.csv or .jsonl).
    #[arg(long, global = true)]
    pub events: Option<PathBuf>,
    /// Per-project snapshot table.
    #[arg(long, global = true)]
    pub projects: Option<PathBuf>,
    /// Participant profile table.
    #[arg(long, global = true)]
    pub profiles: Option<PathBuf>,
    /// Directory for stage artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Observation window in 30-day months.
    #[arg(long, global = true)]
    pub m: Option<u32>,
    /// Years of sustained activity required.
    #[arg(long, global = true)]
    pub t: Option<u32>,
    /// Minimum median monthly commits.
    #[arg(long, global = true)]
    pub k: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Feature subset for `evaluate` (e.g. stability, common, all).
    #[arg(long, global = true)]
    pub dimension: Option<String>,
    /// Perturbation samples per explanation.
    #[arg(long = "n-samples", global = true)]
    pub n_samples: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus with planted ground truth.
    Synth {
        #[arg(long = "n-projects")]
        n_projects: Option<usize>,
    },
    /// Apply the project selection filters.
    Select,
    /// Label every selected project as sustained or not.
    Label,
    /// Assign roles and extract the 64 window variables.
    Featurize,
    /// Fit the boosted-tree model on all labelled projects.
    Train,
    /// Cross-validate the model and the logistic baseline.
    Evaluate {
        /// Evaluate the 18-cell grid m in {1,3,5}, t in {1,2}, k in {1,2,6}.
        #[arg(long)]
        grid: bool,
        /// Also evaluate every feature dimension on its own.
        #[arg(long)]
        ablations: bool,
    },
    /// Explain the trained model's prediction for every project.
    Explain,
    /// Build the determinant tables from the explanations.
    Analyze,
    /// Assemble a Markdown report from the stage artifacts.
    Report,
}

fn load_config(common: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io("config", path, e))?;
            PipelineConfig::from_toml(&text).map_err(|e| CliError::invalid("config", e))?
        }
        None => PipelineConfig::default(),
    };
    let paths = &mut cfg.paths;
    for (slot, flag) in [
        (&mut paths.events, &common.events),
        (&mut paths.projects, &common.projects),
        (&mut paths.profiles, &common.profiles),
        (&mut paths.out, &common.out),
    ] {
        if let Some(p) = flag {
            *slot = Some(p.clone());
        }
    }
    let p = &mut cfg.params;
    p.m = common.m.unwrap_or(p.m);
    p.t = common.t.unwrap_or(p.t);
    p.k = common.k.unwrap_or(p.k);
    p.folds = common.folds.unwrap_or(p.folds);
    if let Some(seed) = common.seed {
        p.seed = seed;
        cfg.synth.seed = seed;
        cfg.train.seed = seed;
        cfg.explain.seed = seed;
    }
    if let Some(n) = common.n_samples {
        cfg.explain.n_samples = n;
    }
    cfg.validate().map_err(|e| CliError::invalid("config", e))?;
    Ok(cfg)
}

fn set_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("SUSTAIN_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::invalid("config", format!("SUSTAIN_THREADS must be a positive integer, got {v:?}")))?;
        // fails only if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    set_threads()?;
    let cfg = load_config(&cli.common)?;
    let ctx = stages::Context::new(cfg, &cli.common)?;
    match cli.command {
        Command::Synth { n_projects } => stages::synth(&ctx, n_projects),
        Command::Select => stages::select(&ctx),
        Command::Label => stages::label(&ctx),
        Command::Featurize => stages::featurize(&ctx),
        Command::Train => stages::train(&ctx),
        Command::Evaluate { grid, ablations } => stages::evaluate(&ctx, grid, ablations),
        Command::Explain => stages::explain(&ctx),
        Command::Analyze => stages::analyze(&ctx),
        Command::Report => stages::report(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
