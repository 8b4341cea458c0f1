//! Orchestration: load inputs, run the requested analysis, write the report
//! bundle.
//!
//! Every structured output embeds the resolved configuration and the toolkit
//! version, and is byte-identical across reruns with the same inputs and
//! configuration — the only exception is the timestamp field, which is
//! explicitly marked and can be disabled. Charts are a pure view over the
//! structured data.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bias_stats::{
    bias_accuracy, cooccurrence, fit_bias_model, write_cooccurrence_csv, BiasAccuracy, BiasMode,
};
use crate::characteristics::{
    analyze_false_negatives, map_gain_by_characteristic, FnAnalysis, InstanceCounts, MapGainRow,
};
use crate::charts::{render_bar_chart, write_svg};
use crate::cures::{sensitivity_report, CureSensitivity};
use crate::data_model::{validate, Dataset, PredictionSet, Severity, ValidationFinding};
use crate::diagnosis::{diagnose_dataset, DatasetDiagnosis, DiagnosisConfig, ErrorType};
use crate::evaluation::{evaluate_dataset, EvalConfig, EvalResult};
use crate::ingestion::{
    load_builtin_taxonomy, load_ground_truth, load_predictions, load_taxonomy_files,
    GtLoadOptions, PredicateKind, Taxonomy,
};
use crate::{Error, Result, VERSION};

/// Where the frequency characteristics take their counts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountSource {
    Train,
    Eval,
}

impl CountSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            CountSource::Train => "train",
            CountSource::Eval => "eval",
        }
    }
}

impl std::str::FromStr for CountSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(CountSource::Train),
            "eval" => Ok(CountSource::Eval),
            other => Err(Error::Config(format!(
                "unknown count source '{other}' (expected 'train' or 'eval')"
            ))),
        }
    }
}

/// Fully resolved run configuration; echoed into every report.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub groundtruth: PathBuf,
    pub predictions: Option<PathBuf>,
    /// Training split, used for frequency counts and for fitting the bias
    /// model when present.
    pub train_groundtruth: Option<PathBuf>,
    /// `vidor`, `vidvrd` or `custom`.
    pub dataset: String,
    pub split: String,
    pub top_k: usize,
    pub viou_threshold: f64,
    pub background_threshold: f64,
    pub count_source: CountSource,
    pub bias_mode: BiasMode,
    pub bias_alpha: f64,
    pub out: PathBuf,
    pub charts: bool,
    /// Worker threads; `None` = all available. Results never depend on it.
    pub jobs: Option<usize>,
    pub seed: u64,
    /// Emit the timestamp field. Disable for byte-identical reruns.
    pub timestamp: bool,
    /// Applied to ground-truth files that omit fps.
    pub default_fps: Option<f64>,
    /// Custom taxonomy (required to group a `custom` dataset's bias report).
    pub objects_csv: Option<PathBuf>,
    pub predicates_csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            groundtruth: PathBuf::new(),
            predictions: None,
            train_groundtruth: None,
            dataset: "custom".into(),
            split: "validation".into(),
            top_k: 200,
            viou_threshold: 0.5,
            background_threshold: 0.1,
            count_source: CountSource::Train,
            bias_mode: BiasMode::Factored,
            bias_alpha: 1.0,
            out: PathBuf::from("out"),
            charts: false,
            jobs: None,
            seed: 0,
            timestamp: true,
            default_fps: None,
            objects_csv: None,
            predicates_csv: None,
        }
    }
}

impl RunConfig {
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            viou_threshold: self.viou_threshold,
            top_k: self.top_k,
            background_threshold: self.background_threshold,
        }
    }

    pub fn diagnosis_config(&self) -> DiagnosisConfig {
        DiagnosisConfig {
            eval: self.eval_config(),
            ..DiagnosisConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        self.eval_config().validate()?;
        if !matches!(self.dataset.as_str(), "vidor" | "vidvrd" | "custom") {
            return Err(Error::Config(format!(
                "unknown dataset '{}' (expected vidor, vidvrd or custom)",
                self.dataset
            )));
        }
        Ok(())
    }

    fn echo(&self) -> ConfigEcho {
        let path = |p: &PathBuf| p.display().to_string();
        ConfigEcho {
            groundtruth: path(&self.groundtruth),
            predictions: self.predictions.as_ref().map(path),
            train_groundtruth: self.train_groundtruth.as_ref().map(path),
            dataset: self.dataset.clone(),
            split: self.split.clone(),
            top_k: self.top_k,
            viou_threshold: self.viou_threshold,
            background_threshold: self.background_threshold,
            count_source: self.count_source.as_str(),
            bias_mode: self.bias_mode.as_str(),
            bias_alpha: self.bias_alpha,
            out: path(&self.out),
            charts: self.charts,
            seed: self.seed,
            default_fps: self.default_fps,
            objects_csv: self.objects_csv.as_ref().map(path),
            predicates_csv: self.predicates_csv.as_ref().map(path),
        }
    }

    fn meta(&self) -> ReportMeta {
        ReportMeta {
            tool: "vrd-diagnose",
            version: VERSION,
            generated_at_epoch_seconds: self.timestamp.then(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            }),
            config: self.echo(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ConfigEcho {
    groundtruth: String,
    predictions: Option<String>,
    train_groundtruth: Option<String>,
    dataset: String,
    split: String,
    top_k: usize,
    viou_threshold: f64,
    background_threshold: f64,
    count_source: &'static str,
    bias_mode: &'static str,
    bias_alpha: f64,
    out: String,
    charts: bool,
    // The worker count is deliberately not echoed: results are independent
    // of it, and reports must stay byte-identical across --jobs settings.
    seed: u64,
    default_fps: Option<f64>,
    objects_csv: Option<String>,
    predicates_csv: Option<String>,
}

/// Identification block embedded in every structured report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    tool: &'static str,
    version: &'static str,
    /// Unix seconds; absent when the run disables timestamps so that
    /// reruns are byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_epoch_seconds: Option<u64>,
    config: ConfigEcho,
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

/// Everything a run needs in memory, plus loading observations.
pub struct LoadedRun {
    pub dataset: Dataset,
    pub predictions: PredictionSet,
    pub taxonomy: Option<Taxonomy>,
    pub warnings: Vec<String>,
    pub n_predictions_loaded: usize,
    pub n_unknown_video_predictions: usize,
    pub n_out_of_vocab_predictions: usize,
}

fn resolve_taxonomy(cfg: &RunConfig) -> Result<(Option<Taxonomy>, Vec<String>)> {
    let mut warnings = Vec::new();
    let taxonomy = match cfg.dataset.as_str() {
        "vidor" | "vidvrd" => Some(load_builtin_taxonomy(&cfg.dataset)?),
        _ => match (&cfg.objects_csv, &cfg.predicates_csv) {
            (Some(obj), Some(pred)) => Some(load_taxonomy_files(obj, pred)?),
            (None, None) => {
                warnings.push(
                    "no taxonomy for the custom dataset: pass --objects-csv and \
                     --predicates-csv to group the bias report; falling back to a \
                     single 'other' group and unknown predicate kinds"
                        .to_string(),
                );
                None
            }
            _ => {
                return Err(Error::Config(
                    "--objects-csv and --predicates-csv must be passed together".into(),
                ))
            }
        },
    };
    Ok((taxonomy, warnings))
}

fn gt_options(cfg: &RunConfig, taxonomy: Option<&Taxonomy>, split: &str) -> GtLoadOptions {
    GtLoadOptions {
        dataset_name: cfg.dataset.clone(),
        split: split.to_string(),
        default_fps: cfg.default_fps,
        object_vocab: taxonomy.map(|t| t.supercategories.keys().cloned().collect()),
        predicate_vocab: taxonomy.map(|t| t.predicate_kinds.keys().cloned().collect()),
    }
}

/// Load ground truth plus predictions according to the configuration.
pub fn load_run(cfg: &RunConfig) -> Result<LoadedRun> {
    cfg.validate()?;
    let (taxonomy, mut warnings) = resolve_taxonomy(cfg)?;
    let gt = load_ground_truth(&cfg.groundtruth, &gt_options(cfg, taxonomy.as_ref(), &cfg.split))?;
    warnings.extend(gt.warnings);
    let mut dataset = gt.dataset;
    // Annotations may use labels beyond the declared vocabulary; widen
    // rather than reject so evaluation still covers them.
    dataset.extend_vocab_from_observed();

    let (predictions, n_loaded, n_unknown, n_oov) = match &cfg.predictions {
        Some(path) => {
            let loaded = load_predictions(path, &dataset)?;
            warnings.extend(loaded.warnings);
            let unknown: usize = loaded.unknown_videos.values().sum();
            let total = loaded.predictions.total() + unknown;
            (loaded.predictions, total, unknown, loaded.out_of_vocab)
        }
        None => (PredictionSet::default(), 0, 0, 0),
    };
    Ok(LoadedRun {
        dataset,
        predictions,
        taxonomy,
        warnings,
        n_predictions_loaded: n_loaded,
        n_unknown_video_predictions: n_unknown,
        n_out_of_vocab_predictions: n_oov,
    })
}

fn load_train_dataset(cfg: &RunConfig, taxonomy: Option<&Taxonomy>) -> Result<Dataset> {
    let path = cfg.train_groundtruth.as_ref().ok_or_else(|| {
        Error::Config(
            "frequency counts come from the training split by default; pass \
             --train-groundtruth <path> or choose --count-source eval"
                .into(),
        )
    })?;
    let gt = load_ground_truth(path, &gt_options(cfg, taxonomy, "train"))?;
    let mut dataset = gt.dataset;
    dataset.extend_vocab_from_observed();
    Ok(dataset)
}

// ---------------------------------------------------------------------------
// Report payloads
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct DatasetStats {
    name: String,
    split: String,
    n_videos: usize,
    n_ground_truth: usize,
    n_predictions_loaded: usize,
    n_predictions_kept: usize,
    n_predictions_truncated: usize,
    n_predictions_unknown_videos: usize,
    n_predictions_out_of_vocab: usize,
}

#[derive(Debug, Clone, Serialize)]
struct EvaluationStats {
    mean_ap: f64,
    n_scorable_videos: usize,
    n_matched: usize,
}

/// Error composition of one run: absolute counts and, over the false
/// positives, ratios.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBreakdown {
    pub n_true_positives: usize,
    pub n_false_positives: usize,
    pub counts: BTreeMap<String, usize>,
    /// Per false-positive type; sums to 1 when any false positive exists.
    pub ratios: BTreeMap<String, f64>,
    pub n_missed_ground_truths: usize,
    pub n_ground_truth: usize,
    pub missed_ground_truth_ratio: f64,
}

impl ErrorBreakdown {
    fn from_diagnosis(diagnosis: &DatasetDiagnosis) -> ErrorBreakdown {
        let counts = diagnosis.error_counts();
        let n_fp = diagnosis.n_false_positives();
        let n_gt = diagnosis.n_ground_truth();
        let n_missed = counts[&ErrorType::MissedGroundTruth];
        let ratios = ErrorType::FP_TYPES
            .iter()
            .map(|t| {
                let ratio = if n_fp == 0 {
                    0.0
                } else {
                    counts[t] as f64 / n_fp as f64
                };
                (t.as_str().to_string(), ratio)
            })
            .collect();
        ErrorBreakdown {
            n_true_positives: diagnosis.n_true_positives(),
            n_false_positives: n_fp,
            counts: counts
                .into_iter()
                .map(|(t, c)| (t.as_str().to_string(), c))
                .collect(),
            ratios,
            n_missed_ground_truths: n_missed,
            n_ground_truth: n_gt,
            missed_ground_truth_ratio: if n_gt == 0 {
                0.0
            } else {
                n_missed as f64 / n_gt as f64
            },
        }
    }
}

#[derive(Serialize)]
struct SummaryFile {
    meta: ReportMeta,
    dataset: DatasetStats,
    evaluation: EvaluationStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_breakdown: Option<ErrorBreakdown>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct FpBreakdownFile {
    meta: ReportMeta,
    breakdown: ErrorBreakdown,
}

#[derive(Serialize)]
struct FnCharacteristicsFile {
    meta: ReportMeta,
    analysis: FnAnalysis,
}

#[derive(Serialize)]
struct CureSensitivityFile {
    meta: ReportMeta,
    sensitivity: CureSensitivity,
}

#[derive(Serialize)]
struct BiasReportFile {
    meta: ReportMeta,
    /// Which split the model was fit on: "train", or "eval" when no
    /// training split was supplied.
    fit_on: &'static str,
    alpha: f64,
    n_train_instances: u64,
    n_predicates: usize,
    n_object_categories: usize,
    accuracy: BiasAccuracy,
    cooccurrence_total: u64,
    cooccurrence_files: Vec<String>,
    warnings: Vec<String>,
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

/// Pretty-print `value` as JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::parse(path, e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_per_video_ap_csv(
    path: &Path,
    result: &EvalResult,
    dataset: &Dataset,
    preds: &PredictionSet,
    top_k: usize,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["video_id", "ap", "n_ground_truth", "n_predictions_kept", "n_matched"])
        .map_err(|e| Error::parse(path, e.to_string()))?;
    for (vid, ap) in &result.per_video_ap {
        let ann = &dataset.videos[vid];
        let kept = preds.for_video(vid).len().min(top_k);
        let matched = result.per_video_matched.get(vid).copied().unwrap_or(0);
        // Videos without ground truth carry no AP; the cell stays empty
        // rather than pretending the AP is zero.
        w.write_record([
            vid.clone(),
            ap.map(|a| a.to_string()).unwrap_or_default(),
            ann.ground_truth.len().to_string(),
            kept.to_string(),
            matched.to_string(),
        ])
        .map_err(|e| Error::parse(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_map_gain_csv(path: &Path, rows: &[MapGainRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["characteristic", "bin", "n_missed_removed", "map_after", "gain"])
        .map_err(|e| Error::parse(path, e.to_string()))?;
    for row in rows {
        w.write_record([
            row.characteristic.to_string(),
            row.bin.to_string(),
            row.n_missed_removed.to_string(),
            row.map_after.to_string(),
            row.gain.to_string(),
        ])
        .map_err(|e| Error::parse(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

/// Result handed back to the CLI so it can print a one-line summary.
#[derive(Debug)]
pub struct RunOutputs {
    /// mAP for evaluate and diagnose runs; probe accuracy for bias runs.
    pub headline: f64,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn dataset_stats(cfg: &RunConfig, run: &LoadedRun, result: &EvalResult) -> DatasetStats {
    DatasetStats {
        name: cfg.dataset.clone(),
        split: cfg.split.clone(),
        n_videos: run.dataset.videos.len(),
        n_ground_truth: result.n_gt,
        n_predictions_loaded: run.n_predictions_loaded,
        n_predictions_kept: result.n_predictions_kept,
        n_predictions_truncated: run
            .n_predictions_loaded
            .saturating_sub(result.n_predictions_kept + run.n_unknown_video_predictions),
        n_predictions_unknown_videos: run.n_unknown_video_predictions,
        n_predictions_out_of_vocab: run.n_out_of_vocab_predictions,
    }
}

/// `evaluate`: load, match, score; write `summary.json` and
/// `per_video_ap.csv`.
pub fn run_evaluate(cfg: &RunConfig) -> Result<RunOutputs> {
    let run = load_run(cfg)?;
    let result = evaluate_dataset(&run.dataset, &run.predictions, &cfg.eval_config())?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;

    let summary = SummaryFile {
        meta: cfg.meta(),
        dataset: dataset_stats(cfg, &run, &result),
        evaluation: EvaluationStats {
            mean_ap: result.mean_ap,
            n_scorable_videos: result.n_scorable,
            n_matched: result.n_matched,
        },
        error_breakdown: None,
        warnings: run.warnings.clone(),
    };
    let summary_path = cfg.out.join("summary.json");
    write_json(&summary_path, &summary)?;
    let ap_path = cfg.out.join("per_video_ap.csv");
    write_per_video_ap_csv(&ap_path, &result, &run.dataset, &run.predictions, cfg.top_k)?;
    Ok(RunOutputs {
        headline: result.mean_ap,
        files: vec![summary_path, ap_path],
        warnings: run.warnings,
    })
}

/// `diagnose`: the full pipeline — evaluation, error taxonomy, false-negative
/// characteristics, per-bin mAP gains, cure sensitivity, optional charts.
pub fn run_diagnose(cfg: &RunConfig) -> Result<RunOutputs> {
    let run = load_run(cfg)?;
    let eval_cfg = cfg.eval_config();
    let diag_cfg = cfg.diagnosis_config();
    let baseline = evaluate_dataset(&run.dataset, &run.predictions, &eval_cfg)?;
    let diagnosis = diagnose_dataset(&run.dataset, &run.predictions, &diag_cfg)?;
    let mut warnings = run.warnings.clone();

    let counts = match cfg.count_source {
        CountSource::Eval => InstanceCounts::from_dataset(&run.dataset, "eval"),
        CountSource::Train => {
            let train = load_train_dataset(cfg, run.taxonomy.as_ref())?;
            InstanceCounts::from_dataset(&train, "train")
        }
    };
    let fn_analysis = analyze_false_negatives(&run.dataset, &diagnosis, &counts);
    warnings.extend(fn_analysis.warnings.iter().cloned());
    let gain_rows = map_gain_by_characteristic(
        &run.dataset,
        &run.predictions,
        &diagnosis,
        &counts,
        &eval_cfg,
        &baseline,
    )?;
    let sensitivity =
        sensitivity_report(&run.dataset, &run.predictions, &diagnosis, &diag_cfg, &baseline)?;
    let breakdown = ErrorBreakdown::from_diagnosis(&diagnosis);

    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let mut files = Vec::new();

    let summary_path = cfg.out.join("summary.json");
    write_json(
        &summary_path,
        &SummaryFile {
            meta: cfg.meta(),
            dataset: dataset_stats(cfg, &run, &baseline),
            evaluation: EvaluationStats {
                mean_ap: baseline.mean_ap,
                n_scorable_videos: baseline.n_scorable,
                n_matched: baseline.n_matched,
            },
            error_breakdown: Some(breakdown.clone()),
            warnings: warnings.clone(),
        },
    )?;
    files.push(summary_path);

    let ap_path = cfg.out.join("per_video_ap.csv");
    write_per_video_ap_csv(&ap_path, &baseline, &run.dataset, &run.predictions, cfg.top_k)?;
    files.push(ap_path);

    let fp_path = cfg.out.join("fp_breakdown.json");
    write_json(
        &fp_path,
        &FpBreakdownFile {
            meta: cfg.meta(),
            breakdown: breakdown.clone(),
        },
    )?;
    files.push(fp_path);

    let fn_path = cfg.out.join("fn_characteristics.json");
    write_json(
        &fn_path,
        &FnCharacteristicsFile {
            meta: cfg.meta(),
            analysis: fn_analysis.clone(),
        },
    )?;
    files.push(fn_path);

    let gain_path = cfg.out.join("map_gain_characteristics.csv");
    write_map_gain_csv(&gain_path, &gain_rows)?;
    files.push(gain_path);

    let cure_path = cfg.out.join("cure_sensitivity.json");
    write_json(
        &cure_path,
        &CureSensitivityFile {
            meta: cfg.meta(),
            sensitivity: sensitivity.clone(),
        },
    )?;
    files.push(cure_path);

    if cfg.charts {
        let chart_dir = cfg.out.join("charts");
        std::fs::create_dir_all(&chart_dir).map_err(|e| Error::io(&chart_dir, e))?;

        let fp_bars: Vec<(String, f64)> = ErrorType::FP_TYPES
            .iter()
            .map(|t| (t.as_str().to_string(), breakdown.counts[t.as_str()] as f64))
            .collect();
        let p = chart_dir.join("fp_breakdown.svg");
        write_svg(&p, &render_bar_chart("false positives by error type", &fp_bars))?;
        files.push(p);

        let cure_bars: Vec<(String, f64)> = sensitivity
            .cures
            .iter()
            .map(|c| (c.cure.clone(), c.gain))
            .collect();
        let p = chart_dir.join("cure_gains.svg");
        write_svg(&p, &render_bar_chart("mAP gain per cure", &cure_bars))?;
        files.push(p);

        for report in &fn_analysis.characteristics {
            let bars: Vec<(String, f64)> = report
                .bins
                .iter()
                .map(|b| (b.bin.to_string(), b.miss_rate.unwrap_or(0.0)))
                .collect();
            let p = chart_dir.join(format!("fn_{}.svg", report.characteristic));
            write_svg(
                &p,
                &render_bar_chart(
                    &format!("miss rate by {}", report.characteristic),
                    &bars,
                ),
            )?;
            files.push(p);
        }
    }

    Ok(RunOutputs {
        headline: baseline.mean_ap,
        files,
        warnings,
    })
}

/// `bias`: fit the predicate probe and write `bias_report.json` plus the
/// co-occurrence CSVs.
pub fn run_bias(cfg: &RunConfig) -> Result<RunOutputs> {
    cfg.validate()?;
    let (taxonomy, mut warnings) = resolve_taxonomy(cfg)?;
    let eval_gt =
        load_ground_truth(&cfg.groundtruth, &gt_options(cfg, taxonomy.as_ref(), &cfg.split))?;
    warnings.extend(eval_gt.warnings);
    let mut eval = eval_gt.dataset;
    eval.extend_vocab_from_observed();

    let (fit_dataset, fit_on) = match &cfg.train_groundtruth {
        Some(path) => {
            let gt = load_ground_truth(path, &gt_options(cfg, taxonomy.as_ref(), "train"))?;
            warnings.extend(gt.warnings);
            let mut train = gt.dataset;
            train.extend_vocab_from_observed();
            (train, "train")
        }
        None => {
            warnings.push(
                "no --train-groundtruth given; fitting the bias model on the \
                 evaluation split itself"
                    .to_string(),
            );
            (eval.clone(), "eval")
        }
    };

    let model = fit_bias_model(&fit_dataset, cfg.bias_alpha)?;
    let accuracy = bias_accuracy(&model, &eval, cfg.bias_mode)?;

    let empty_taxonomy = Taxonomy {
        supercategories: BTreeMap::new(),
        predicate_kinds: BTreeMap::new(),
    };
    let (matrix, co_warnings) =
        cooccurrence(&fit_dataset, taxonomy.as_ref().unwrap_or(&empty_taxonomy));
    warnings.extend(co_warnings);

    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let mut files = Vec::new();
    let mut co_files = Vec::new();
    let kinds: [(Option<PredicateKind>, &str, u64); 3] = [
        (
            Some(PredicateKind::Action),
            "cooccurrence_action.csv",
            matrix.cells.values().map(|c| c.action).sum(),
        ),
        (
            Some(PredicateKind::Spatial),
            "cooccurrence_spatial.csv",
            matrix.cells.values().map(|c| c.spatial).sum(),
        ),
        (
            None,
            "cooccurrence_unknown.csv",
            matrix.cells.values().map(|c| c.unknown).sum(),
        ),
    ];
    for (kind, name, total) in kinds {
        // The unknown-kind grid only exists when the taxonomy missed
        // something; action and spatial files are always written.
        if kind.is_none() && total == 0 {
            continue;
        }
        let path = cfg.out.join(name);
        write_cooccurrence_csv(&matrix, kind, &path)?;
        co_files.push(name.to_string());
        files.push(path);
    }

    let report_path = cfg.out.join("bias_report.json");
    write_json(
        &report_path,
        &BiasReportFile {
            meta: cfg.meta(),
            fit_on,
            alpha: model.alpha(),
            n_train_instances: model.n_train(),
            n_predicates: model.predicate_vocab().len(),
            n_object_categories: fit_dataset.object_vocab.len(),
            accuracy: accuracy.clone(),
            cooccurrence_total: matrix.total,
            cooccurrence_files: co_files,
            warnings: warnings.clone(),
        },
    )?;
    files.insert(0, report_path);

    Ok(RunOutputs {
        headline: accuracy.accuracy,
        files,
        warnings,
    })
}

/// `validate`: run every annotation invariant and report findings.
pub struct ValidationOutcome {
    pub findings: Vec<ValidationFinding>,
    pub warnings: Vec<String>,
    pub n_videos: usize,
}

impl ValidationOutcome {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }
}

pub fn run_validate(cfg: &RunConfig) -> Result<ValidationOutcome> {
    cfg.validate()?;
    let (taxonomy, mut warnings) = resolve_taxonomy(cfg)?;
    let gt = load_ground_truth(&cfg.groundtruth, &gt_options(cfg, taxonomy.as_ref(), &cfg.split))?;
    warnings.extend(gt.warnings);
    let mut findings = Vec::new();
    for ann in gt.dataset.videos.values() {
        findings.extend(validate(ann));
    }
    if let Some(pred_path) = &cfg.predictions {
        let mut dataset = gt.dataset.clone();
        dataset.extend_vocab_from_observed();
        let loaded = load_predictions(pred_path, &dataset)?;
        warnings.extend(loaded.warnings);
    }
    Ok(ValidationOutcome {
        findings,
        warnings,
        n_videos: gt.dataset.videos.len(),
    })
}
