//! `vrd-diagnose` — score video relation detections and break their
//! failures down by cause.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad usage or configuration,
//! 3 validation findings.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vrd_diagnose::fixtures::{generate_dataset, perturb, DatasetParams, InjectionSpec};
use vrd_diagnose::ingestion::{write_ground_truth_dir, write_predictions_file};
use vrd_diagnose::report::{
    run_bias, run_diagnose, run_evaluate, run_validate, write_json, RunConfig,
};
use vrd_diagnose::{Error, VERSION};

#[derive(Parser)]
#[command(
    name = "vrd-diagnose",
    version,
    about = "Evaluate video relation detections and diagnose where they fail"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Match predictions against ground truth; print mAP, write per-video AP.
    Evaluate(ScoredArgs),
    /// Full diagnosis: error taxonomy, miss characteristics, cure gains.
    Diagnose(DiagnoseArgs),
    /// Fit the predicate bias probe and write the co-occurrence grids.
    Bias(BiasArgs),
    /// Check annotations (and optionally predictions) against the format
    /// invariants.
    Validate(ValidateArgs),
    /// Generate a synthetic dataset with controlled error injections.
    Fixtures(FixtureArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Ground-truth annotation directory (one JSON file per video).
    #[arg(long)]
    groundtruth: PathBuf,
    /// Dataset flavor: vidor, vidvrd or custom.
    #[arg(long, default_value = "custom")]
    dataset: String,
    /// Split label echoed into reports.
    #[arg(long, default_value = "validation")]
    split: String,
    /// Directory the report bundle is written to.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to every available core. Results are
    /// independent of this by construction.
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed echoed into reports. The analyses are deterministic; the seed
    /// only matters to fixture generation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Omit the timestamp field so reruns are byte-identical.
    #[arg(long)]
    no_timestamp: bool,
    /// Frame rate applied to annotations that do not declare one.
    #[arg(long)]
    default_fps: Option<f64>,
    /// Object taxonomy CSV (header `label,group`) for custom datasets.
    #[arg(long, requires = "predicates_csv")]
    objects_csv: Option<PathBuf>,
    /// Predicate taxonomy CSV (header `label,group`; groups `action` and
    /// `spatial`) for custom datasets.
    #[arg(long, requires = "objects_csv")]
    predicates_csv: Option<PathBuf>,
}

impl CommonArgs {
    fn base_config(&self) -> RunConfig {
        RunConfig {
            groundtruth: self.groundtruth.clone(),
            dataset: self.dataset.clone(),
            split: self.split.clone(),
            out: self.out.clone(),
            jobs: self.jobs,
            seed: self.seed,
            timestamp: !self.no_timestamp,
            default_fps: self.default_fps,
            objects_csv: self.objects_csv.clone(),
            predicates_csv: self.predicates_csv.clone(),
            ..RunConfig::default()
        }
    }
}

#[derive(Args)]
struct ScoredArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Aggregate prediction file (video id → ranked relation records).
    #[arg(long)]
    predictions: PathBuf,
    /// Highest-scored predictions kept per video.
    #[arg(long, default_value_t = 200)]
    top_k: usize,
    /// Minimum pair overlap for a prediction to match a ground truth.
    #[arg(long, default_value_t = 0.5)]
    viou_threshold: f64,
    /// Overlap below which a false positive counts as pure background.
    #[arg(long, default_value_t = 0.1)]
    background_threshold: f64,
}

impl ScoredArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            predictions: Some(self.predictions.clone()),
            top_k: self.top_k,
            viou_threshold: self.viou_threshold,
            background_threshold: self.background_threshold,
            ..self.common.base_config()
        }
    }
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    scored: ScoredArgs,
    /// Also render SVG charts of the structured reports.
    #[arg(long)]
    charts: bool,
    /// Where the frequency characteristics take their counts from:
    /// train (requires --train-groundtruth) or eval.
    #[arg(long, default_value = "train")]
    count_source: String,
    /// Training-split annotation directory.
    #[arg(long)]
    train_groundtruth: Option<PathBuf>,
}

impl DiagnoseArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        Ok(RunConfig {
            charts: self.charts,
            count_source: self.count_source.parse()?,
            train_groundtruth: self.train_groundtruth.clone(),
            ..self.scored.config()
        })
    }
}

#[derive(Args)]
struct BiasArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training-split annotations to fit on; without it the model is fit
    /// on the evaluation split itself (reported as a warning).
    #[arg(long)]
    train_groundtruth: Option<PathBuf>,
    /// factored (smoothed P(p)·P(s|p)·P(o|p)) or joint (raw count lookup).
    #[arg(long, default_value = "factored")]
    bias_mode: String,
    /// Laplace smoothing strength for the factored mode.
    #[arg(long, default_value_t = 1.0)]
    bias_alpha: f64,
}

impl BiasArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        Ok(RunConfig {
            train_groundtruth: self.train_groundtruth.clone(),
            bias_mode: self.bias_mode.parse()?,
            bias_alpha: self.bias_alpha,
            ..self.common.base_config()
        })
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Prediction file to check alongside the annotations.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct FixtureArgs {
    /// Directory the fixture bundle is written to.
    #[arg(long, default_value = "fixture")]
    out: PathBuf,
    /// Fixes both dataset generation and injection placement.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    videos: usize,
    #[arg(long, default_value_t = 6)]
    relations_per_video: usize,
    #[arg(long, default_value_t = 8)]
    object_categories: usize,
    #[arg(long, default_value_t = 6)]
    predicates: usize,
    #[arg(long, default_value_t = 10.0)]
    fps: f64,
    /// Shortest trajectory, in frames.
    #[arg(long, default_value_t = 20)]
    min_frames: i64,
    /// Longest trajectory, in frames (must stay under 350).
    #[arg(long, default_value_t = 320)]
    max_frames: i64,
    /// Mislabelled duplicates to inject per video.
    #[arg(long, default_value_t = 0)]
    classification: usize,
    /// Under-localized duplicates to inject per video.
    #[arg(long, default_value_t = 0)]
    localization: usize,
    /// Under-localized and mislabelled duplicates per video.
    #[arg(long, default_value_t = 0)]
    confusion: usize,
    /// Lower-scored exact duplicates per video.
    #[arg(long, default_value_t = 0)]
    double_detection: usize,
    /// Predictions overlapping nothing, per video.
    #[arg(long, default_value_t = 0)]
    background: usize,
    /// Ground truths per video left without any matching prediction.
    #[arg(long, default_value_t = 0)]
    missed: usize,
    /// Overlap band for under-localized injections.
    #[arg(long, default_value_t = 0.15)]
    band_low: f64,
    #[arg(long, default_value_t = 0.45)]
    band_high: f64,
    /// Fraction of under-localized injections realized as temporal shifts.
    #[arg(long, default_value_t = 0.5)]
    temporal_shift_fraction: f64,
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let config_error = err
                .chain()
                .any(|cause| matches!(cause.downcast_ref::<Error>(), Some(Error::Config(_))));
            if config_error {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn init_pool(jobs: Option<usize>) {
    if let Some(n) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
}

fn report_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Evaluate(args) => {
            init_pool(args.common.jobs);
            let cfg = args.config();
            let out = run_evaluate(&cfg)?;
            report_warnings(&out.warnings);
            println!("mAP {}", out.headline);
            eprintln!("wrote {} file(s) to {}", out.files.len(), cfg.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose(args) => {
            init_pool(args.scored.common.jobs);
            let cfg = args.config()?;
            let out = run_diagnose(&cfg)?;
            report_warnings(&out.warnings);
            println!("mAP {}", out.headline);
            eprintln!("wrote {} file(s) to {}", out.files.len(), cfg.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Bias(args) => {
            init_pool(args.common.jobs);
            let cfg = args.config()?;
            let out = run_bias(&cfg)?;
            report_warnings(&out.warnings);
            println!("accuracy {}", out.headline);
            eprintln!("wrote {} file(s) to {}", out.files.len(), cfg.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(args) => {
            let cfg = RunConfig {
                predictions: args.predictions.clone(),
                ..args.common.base_config()
            };
            match run_validate(&cfg) {
                Ok(outcome) => {
                    report_warnings(&outcome.warnings);
                    for finding in &outcome.findings {
                        println!("{finding}");
                    }
                    if outcome.findings.is_empty() {
                        println!("ok: {} video(s) checked, no findings", outcome.n_videos);
                        Ok(ExitCode::SUCCESS)
                    } else {
                        println!(
                            "{} finding(s) across {} video(s)",
                            outcome.findings.len(),
                            outcome.n_videos
                        );
                        Ok(ExitCode::from(3))
                    }
                }
                // A file that cannot even be parsed is itself the finding.
                Err(err) if is_data_finding(&err) => {
                    println!("{err}");
                    println!("1 finding (file level)");
                    Ok(ExitCode::from(3))
                }
                Err(err) => Err(err.into()),
            }
        }
        Command::Fixtures(args) => run_fixtures(args),
    }
}

/// Errors that describe the *data* rather than the run; `validate` reports
/// them as findings instead of failing.
fn is_data_finding(err: &Error) -> bool {
    !matches!(
        err,
        Error::Io { .. } | Error::Config(_) | Error::UnknownBuiltin(_)
    )
}

fn run_fixtures(args: FixtureArgs) -> anyhow::Result<ExitCode> {
    init_pool(args.jobs);
    let params = DatasetParams {
        n_videos: args.videos,
        relations_per_video: args.relations_per_video,
        n_object_categories: args.object_categories,
        n_predicates: args.predicates,
        fps: args.fps,
        frame_len_range: (args.min_frames, args.max_frames),
        seed: args.seed,
    };
    let spec = InjectionSpec {
        classification: args.classification,
        localization: args.localization,
        confusion: args.confusion,
        double_detection: args.double_detection,
        background: args.background,
        missed_ground_truths: args.missed,
        localization_band: (args.band_low, args.band_high),
        temporal_shift_fraction: args.temporal_shift_fraction,
        seed: args.seed,
    };
    let dataset = generate_dataset(&params)?;
    let injected = perturb(&dataset, &spec)?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let gt_dir = args.out.join("gt");
    write_ground_truth_dir(&dataset, &gt_dir)?;
    write_predictions_file(&injected.predictions, &args.out.join("predictions.json"))?;
    write_json(&args.out.join("intents.json"), &injected.intent_labels())?;

    let n_gt: usize = dataset.videos.values().map(|a| a.ground_truth.len()).sum();
    let manifest = serde_json::json!({
        "tool": "vrd-diagnose",
        "version": VERSION,
        "dataset": {
            "videos": params.n_videos,
            "relations_per_video": params.relations_per_video,
            "object_categories": params.n_object_categories,
            "predicates": params.n_predicates,
            "fps": params.fps,
            "frame_len_range": [params.frame_len_range.0, params.frame_len_range.1],
            "seed": params.seed,
        },
        "injections_per_video": {
            "classification": spec.classification,
            "localization": spec.localization,
            "confusion": spec.confusion,
            "double_detection": spec.double_detection,
            "background": spec.background,
            "missed_ground_truths": spec.missed_ground_truths,
            "localization_band": [spec.localization_band.0, spec.localization_band.1],
            "temporal_shift_fraction": spec.temporal_shift_fraction,
        },
        "totals": {
            "videos": dataset.videos.len(),
            "ground_truth": n_gt,
            "predictions": injected.predictions.total(),
        },
    });
    write_json(&args.out.join("manifest.json"), &manifest)?;

    println!(
        "wrote fixture bundle ({} video(s), {} ground truth(s), {} prediction(s)) to {}",
        dataset.videos.len(),
        n_gt,
        injected.predictions.total(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
