//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data
//! error (including a failed gradient check).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use temporal_probe_core::analysis::{shuffle_table, HeatmapPair, ShuffleTableOptions};
use temporal_probe_core::dataset::{generate_splits, DatasetStyle};
use temporal_probe_core::eval::threshold_fraction;
use temporal_probe_core::harness::{evaluate_split, ComparisonTable, ExperimentConfig};
use temporal_probe_core::models::{ScorerConfig, ScorerModel, ScorerObjective};
use temporal_probe_core::nn::finite_diff_check;
use temporal_probe_core::perturb::SimilarityLevel;
use temporal_probe_core::rng::seeded;
use temporal_probe_core::synth::{SynthKind, SynthSpec};
use temporal_probe_core::Tensor;

use crate::format::{load_dataset, save_dataset, FormatError};
use crate::heatmap::export_heatmap;
use crate::runner::{load_config, read_report, run_config, runs_root, write_scores_csv};
use crate::weights::load_model;

#[derive(Debug, Parser)]
#[command(
    name = "temporal-probe",
    version,
    about = "Probe the temporal dependence of video summarization benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a dataset directory and check every invariant.
    Validate { dataset: PathBuf },
    /// Print the cross-validation split plan as JSON.
    Splits {
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        permutations: usize,
        #[arg(long, default_value_t = 5)]
        folds: usize,
    },
    /// Run an experiment config and write runs/<name>/.
    Train {
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's dataset path.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Maximum number of folds trained in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Score a dataset with saved weights and print per-video correlations.
    Evaluate {
        weights: PathBuf,
        dataset: PathBuf,
        /// Write per-video results here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.15)]
        threshold: f64,
    },
    /// Similarity between original and shuffled sequences per strategy.
    ShuffleTable {
        dataset: PathBuf,
        #[arg(long, default_value_t = 3)]
        iterations: usize,
        #[arg(long, value_enum, default_value_t = Level::Shot)]
        level: Level,
        /// Block count for the fixed-segment shuffle.
        #[arg(long, default_value_t = 4)]
        segments: usize,
        /// Shots per window for the neighbouring-shot shuffle.
        #[arg(long, default_value_t = 3)]
        window: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: bool,
    },
    /// Export the cosine-similarity and ground-truth-difference heatmaps.
    Heatmap(HeatmapArgs),
    /// Dataset analyses.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
    /// Finite-difference check of a scorer's analytic gradients.
    Gradcheck {
        /// Experiment config or bare scorer config (JSON).
        config: PathBuf,
        #[arg(long, default_value_t = 8)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 32)]
        samples: usize,
    },
    /// Write a planted-structure synthetic dataset.
    Synth {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        videos: usize,
        #[arg(long, default_value_t = 64)]
        frames: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Combine run reports into one comparison table.
    Table {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum Analysis {
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    pub dataset: PathBuf,
    #[arg(long)]
    pub video: String,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Level {
    Frame,
    Shot,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    ContentOnly,
    PositionOnly,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<temporal_probe_core::Error> for CliError {
    fn from(e: temporal_probe_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn usage_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let config = load_config(path).map_err(|e| CliError::Usage(e.to_string()))?;
    config
        .validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(config)
}

fn read_scorer_config(path: &Path) -> Result<ScorerConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Ok(c) = serde_json::from_str::<ExperimentConfig>(&text) {
        return Ok(c.model);
    }
    serde_json::from_str::<ScorerConfig>(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn style_name(style: DatasetStyle) -> String {
    serde_json::to_value(style)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

fn print(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Data(format!("writing output: {e}")))
}

fn heatmap(args: &HeatmapArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let dataset = load_dataset(&args.dataset)?;
    let video = dataset.video(&args.video)?;
    let pair = HeatmapPair::from_record(video);
    for p in export_heatmap(&pair, &args.out)? {
        print(out, &format!("{}\n", p.display()))?;
    }
    let agreement = pair.structure_agreement();
    print(
        out,
        &format!(
            "structure agreement (cosine vs -gt_diff): {:.4}{}\n",
            agreement.value,
            if agreement.degenerate {
                " (degenerate)"
            } else {
                ""
            }
        ),
    )
}

/// Executes a parsed command, writing human-readable output to `out`.
pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Validate { dataset } => {
            let d = load_dataset(&dataset)?;
            let frames: usize = d.videos.iter().map(|v| v.frames()).sum();
            print(
                out,
                &format!(
                    "{}: {} videos, {} frames, D = {}, style {}\n",
                    d.name,
                    d.videos.len(),
                    frames,
                    d.feature_dim,
                    style_name(d.style)
                ),
            )
        }
        Command::Splits {
            dataset,
            seed,
            permutations,
            folds,
        } => {
            let d = load_dataset(&dataset)?;
            let plan = generate_splits(&d, seed, permutations, folds)?;
            let text =
                serde_json::to_string_pretty(&plan).map_err(|e| CliError::Data(e.to_string()))?;
            print(out, &(text + "\n"))
        }
        Command::Train {
            config,
            seed,
            dataset,
            jobs,
        } => {
            let mut c = usage_config(&config)?;
            if let Some(s) = seed {
                c.seed = s;
            }
            if let Some(d) = dataset {
                c.dataset = d.to_string_lossy().into_owned();
            }
            if c.dataset.is_empty() {
                return Err(CliError::Usage(String::from(
                    "no dataset: set \"dataset\" in the config or pass --dataset",
                )));
            }
            let (report, dir) = run_config(&c, jobs, &runs_root())?;
            print(
                out,
                &format!(
                    "{} seed {}: {} on {} [{}], {} folds, kendall {:.4}, spearman {:.4}, {} degenerate videos, {:.1}s\nwrote {}\n",
                    report.name,
                    report.seed,
                    report.model,
                    report.dataset,
                    report.perturbation,
                    report.folds.len(),
                    report.aggregate_kendall,
                    report.aggregate_spearman,
                    report.degenerate_videos,
                    report.wall_clock_secs,
                    dir.display()
                ),
            )
        }
        Command::Evaluate {
            weights,
            dataset,
            out: dest,
            threshold,
        } => {
            let model = load_model(&weights)?;
            let d = load_dataset(&dataset)?;
            let videos: Vec<_> = d.videos.iter().collect();
            let results = evaluate_split(&model, &videos, d.style)?;
            let n = results.len() as f64;
            let kendall = results.iter().map(|r| r.kendall).sum::<f64>() / n;
            let spearman = results.iter().map(|r| r.spearman).sum::<f64>() / n;
            let frac = threshold_fraction(&results, threshold)?;
            match dest {
                Some(path) => write_scores_csv(&path, &results)?,
                None => {
                    let mut text = String::from("video_id,kendall,spearman,degenerate\n");
                    for r in &results {
                        text += &format!(
                            "{},{},{},{}\n",
                            r.video_id, r.kendall, r.spearman, r.degenerate
                        );
                    }
                    print(out, &text)?;
                }
            }
            print(
                out,
                &format!(
                    "mean kendall {kendall:.4}, mean spearman {spearman:.4}, {:.1}% of videos at kendall >= {threshold}\n",
                    100.0 * frac
                ),
            )
        }
        Command::ShuffleTable {
            dataset,
            iterations,
            level,
            segments,
            window,
            seed,
            csv,
        } => {
            let d = load_dataset(&dataset)?;
            let opts = ShuffleTableOptions {
                iterations,
                level: match level {
                    Level::Frame => SimilarityLevel::Frame,
                    Level::Shot => SimilarityLevel::Shot,
                },
                segments,
                window,
                seed,
            };
            let table = shuffle_table(&d, &opts).map_err(|e| match e {
                temporal_probe_core::Error::InvalidConfig(m) => CliError::Usage(m),
                other => other.into(),
            })?;
            print(out, &if csv { table.to_csv() } else { table.to_text() })
        }
        Command::Heatmap(args)
        | Command::Analyze {
            what: Analysis::Heatmap(args),
        } => heatmap(&args, out),
        Command::Gradcheck {
            config,
            frames,
            seed,
            tolerance,
            samples,
        } => {
            let scorer = read_scorer_config(&config)?;
            scorer
                .validate()
                .map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
            if frames == 0 {
                return Err(CliError::Usage(String::from("--frames must be at least 1")));
            }
            let mut model = ScorerModel::build(scorer.clone(), seed)?;
            let mut rng = seeded(seed ^ 0x9e37);
            let d = scorer.input_dim;
            let features = Tensor::matrix(
                frames,
                d,
                (0..frames * d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )?;
            let target: Vec<f32> = (0..frames).map(|_| rng.gen_range(0.0..1.0)).collect();
            let report = finite_diff_check(
                &mut ScorerObjective {
                    model: &mut model,
                    features: &features,
                    target: &target,
                    loss_scale: 1.0,
                },
                tolerance,
                samples,
                seed,
            );
            let mut text = String::new();
            for b in &report.blocks {
                text += &format!(
                    "{:<32} {:>6} coords {:>4} skipped  max rel error {:.3e}\n",
                    b.name, b.coords_checked, b.coords_skipped, b.max_rel_error
                );
            }
            text += &format!(
                "{}: max relative error {:.3e} (tolerance {tolerance:e})\n",
                if report.passed() { "PASS" } else { "FAIL" },
                report.max_error()
            );
            print(out, &text)?;
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Data(format!(
                    "gradient check failed: {:.3e} >= {tolerance:e}",
                    report.max_error()
                )))
            }
        }
        Command::Synth {
            kind,
            out: dir,
            videos,
            frames,
            dim,
            seed,
        } => {
            let spec = SynthSpec {
                kind: match kind {
                    Kind::ContentOnly => SynthKind::ContentOnly,
                    Kind::PositionOnly => SynthKind::PositionOnly,
                },
                videos,
                frames,
                dim,
                seed,
            };
            let d = spec
                .generate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            save_dataset(&d, &dir)?;
            print(
                out,
                &format!("wrote {} videos to {}\n", d.videos.len(), dir.display()),
            )
        }
        Command::Table { reports, csv } => {
            let reports = reports
                .iter()
                .map(|p| read_report(p))
                .collect::<Result<Vec<_>, _>>()?;
            let table = ComparisonTable::from_reports(&reports)?;
            print(out, &if csv { table.to_csv() } else { table.to_text() })
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}
