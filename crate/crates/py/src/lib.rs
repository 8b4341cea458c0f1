//! Python bindings for the relation evaluation toolkit.
//!
//! The module mirrors the Rust crate's main types (boxes, trajectories,
//! triplets, predictions, ground-truth instances) and entry points: the
//! voluminal-IoU kernel, per-video matching and diagnosis, file-level
//! evaluation, and synthetic fixture generation.
//!
//! Usage from Python:
//!
//!     import _vrd_diagnose as vrd
//!     tr = vrd.Trajectory(0, [vrd.BoundingBox(0, 0, 10, 10)])
//!     assert vrd.viou(tr, tr) == 1.0

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use vrd_diagnose::data_model::{
    BoundingBox, Prediction, RelationInstance, Trajectory, Triplet, VideoAnnotation,
};
use vrd_diagnose::diagnosis::{diagnose_dataset, diagnose_video, DiagnosisConfig};
use vrd_diagnose::error::Error;
use vrd_diagnose::evaluation::{evaluate_dataset, match_video, EvalConfig};
use vrd_diagnose::fixtures::{generate_dataset, perturb, DatasetParams, InjectionSpec};
use vrd_diagnose::ingestion::{
    load_ground_truth, load_predictions, write_ground_truth_dir, write_predictions_file,
    GtLoadOptions,
};
use vrd_diagnose::overlap;

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Geometry types
// ---------------------------------------------------------------------------

/// Axis-aligned box with [xmin, xmax) × [ymin, ymax) extents in pixels.
#[pyclass(name = "BoundingBox", from_py_object)]
#[derive(Clone)]
struct PyBoundingBox {
    inner: BoundingBox,
}

#[pymethods]
impl PyBoundingBox {
    #[new]
    fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> PyResult<Self> {
        for v in [xmin, ymin, xmax, ymax] {
            if !v.is_finite() {
                return Err(PyValueError::new_err("box coordinates must be finite"));
            }
        }
        Ok(PyBoundingBox {
            inner: BoundingBox::new(xmin, ymin, xmax, ymax),
        })
    }

    #[getter]
    fn xmin(&self) -> f64 {
        self.inner.xmin
    }

    #[getter]
    fn ymin(&self) -> f64 {
        self.inner.ymin
    }

    #[getter]
    fn xmax(&self) -> f64 {
        self.inner.xmax
    }

    #[getter]
    fn ymax(&self) -> f64 {
        self.inner.ymax
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn __repr__(&self) -> String {
        format!(
            "BoundingBox({}, {}, {}, {})",
            self.inner.xmin, self.inner.ymin, self.inner.xmax, self.inner.ymax
        )
    }
}

/// One box per frame from `begin_fid` (inclusive) onwards.
#[pyclass(name = "Trajectory", from_py_object)]
#[derive(Clone)]
struct PyTrajectory {
    inner: Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[new]
    fn new(begin_fid: i64, boxes: Vec<PyBoundingBox>) -> PyResult<Self> {
        if boxes.is_empty() {
            return Err(PyValueError::new_err(
                "a trajectory must cover at least one frame",
            ));
        }
        let boxes = boxes.into_iter().map(|b| b.inner).collect();
        Ok(PyTrajectory {
            inner: Trajectory::new(begin_fid, boxes),
        })
    }

    #[getter]
    fn begin_fid(&self) -> i64 {
        self.inner.begin_fid()
    }

    /// One past the last covered frame id.
    #[getter]
    fn end_fid(&self) -> i64 {
        self.inner.end_fid()
    }

    fn box_at(&self, fid: i64) -> Option<PyBoundingBox> {
        self.inner
            .box_at(fid)
            .map(|b| PyBoundingBox { inner: b.clone() })
    }

    fn mean_area(&self) -> f64 {
        self.inner.mean_area()
    }

    fn __len__(&self) -> usize {
        (self.inner.end_fid() - self.inner.begin_fid()) as usize
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(frames {}..{})",
            self.inner.begin_fid(),
            self.inner.end_fid()
        )
    }
}

// ---------------------------------------------------------------------------
// Relation types
// ---------------------------------------------------------------------------

/// ⟨subject, predicate, object⟩ label.
#[pyclass(name = "Triplet", from_py_object)]
#[derive(Clone)]
struct PyTriplet {
    inner: Triplet,
}

#[pymethods]
impl PyTriplet {
    #[new]
    fn new(subject: String, predicate: String, object: String) -> Self {
        PyTriplet {
            inner: Triplet::new(subject, predicate, object),
        }
    }

    #[getter]
    fn subject(&self) -> String {
        self.inner.subject.clone()
    }

    #[getter]
    fn predicate(&self) -> String {
        self.inner.predicate.clone()
    }

    #[getter]
    fn object(&self) -> String {
        self.inner.object.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Triplet({:?}, {:?}, {:?})",
            self.inner.subject, self.inner.predicate, self.inner.object
        )
    }

    fn __eq__(&self, other: &PyTriplet) -> bool {
        self.inner == other.inner
    }
}

/// One scored candidate relation from a detector.
#[pyclass(name = "Prediction", from_py_object)]
#[derive(Clone)]
struct PyPrediction {
    inner: Prediction,
}

#[pymethods]
impl PyPrediction {
    #[new]
    fn new(
        triplet: PyTriplet,
        score: f64,
        subject_traj: PyTrajectory,
        object_traj: PyTrajectory,
    ) -> PyResult<Self> {
        if !score.is_finite() {
            return Err(PyValueError::new_err("score must be finite"));
        }
        Ok(PyPrediction {
            inner: Prediction {
                triplet: triplet.inner,
                score,
                subject_traj: subject_traj.inner,
                object_traj: object_traj.inner,
            },
        })
    }

    #[getter]
    fn triplet(&self) -> PyTriplet {
        PyTriplet {
            inner: self.inner.triplet.clone(),
        }
    }

    #[getter]
    fn score(&self) -> f64 {
        self.inner.score
    }

    #[getter]
    fn subject_traj(&self) -> PyTrajectory {
        PyTrajectory {
            inner: self.inner.subject_traj.clone(),
        }
    }

    #[getter]
    fn object_traj(&self) -> PyTrajectory {
        PyTrajectory {
            inner: self.inner.object_traj.clone(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Prediction({:?}/{:?}/{:?}, score {})",
            self.inner.triplet.subject,
            self.inner.triplet.predicate,
            self.inner.triplet.object,
            self.inner.score
        )
    }
}

/// One annotated ground-truth relation.
#[pyclass(name = "RelationInstance", from_py_object)]
#[derive(Clone)]
struct PyRelationInstance {
    inner: RelationInstance,
}

#[pymethods]
impl PyRelationInstance {
    /// The temporal extent defaults to the union of the two trajectories.
    #[new]
    #[pyo3(signature = (triplet, subject_traj, object_traj, subject_tid=0, object_tid=1))]
    fn new(
        triplet: PyTriplet,
        subject_traj: PyTrajectory,
        object_traj: PyTrajectory,
        subject_tid: i64,
        object_tid: i64,
    ) -> Self {
        let begin_fid = subject_traj
            .inner
            .begin_fid()
            .min(object_traj.inner.begin_fid());
        let end_fid = subject_traj.inner.end_fid().max(object_traj.inner.end_fid());
        PyRelationInstance {
            inner: RelationInstance {
                triplet: triplet.inner,
                subject_traj: subject_traj.inner,
                object_traj: object_traj.inner,
                video_id: String::new(),
                subject_tid,
                object_tid,
                begin_fid,
                end_fid,
            },
        }
    }

    #[getter]
    fn triplet(&self) -> PyTriplet {
        PyTriplet {
            inner: self.inner.triplet.clone(),
        }
    }

    #[getter]
    fn subject_traj(&self) -> PyTrajectory {
        PyTrajectory {
            inner: self.inner.subject_traj.clone(),
        }
    }

    #[getter]
    fn object_traj(&self) -> PyTrajectory {
        PyTrajectory {
            inner: self.inner.object_traj.clone(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "RelationInstance({:?}/{:?}/{:?}, frames {}..{})",
            self.inner.triplet.subject,
            self.inner.triplet.predicate,
            self.inner.triplet.object,
            self.inner.begin_fid,
            self.inner.end_fid
        )
    }
}

// ---------------------------------------------------------------------------
// Overlap kernel
// ---------------------------------------------------------------------------

/// Voluminal IoU of two trajectories: intersection volume over the shared
/// frames divided by the union volume over all covered frames.
#[pyfunction]
fn viou(a: &PyTrajectory, b: &PyTrajectory) -> f64 {
    overlap::viou(&a.inner, &b.inner)
}

/// Pair overlap: the smaller of the subject–subject and object–object vIoUs.
#[pyfunction]
fn pair_overlap(
    pred_subject: &PyTrajectory,
    pred_object: &PyTrajectory,
    gt_subject: &PyTrajectory,
    gt_object: &PyTrajectory,
) -> f64 {
    overlap::pair_overlap(
        &pred_subject.inner,
        &pred_object.inner,
        &gt_subject.inner,
        &gt_object.inner,
    )
}

// ---------------------------------------------------------------------------
// Per-video matching and diagnosis
// ---------------------------------------------------------------------------

fn eval_config(top_k: usize, viou_threshold: f64, background_threshold: f64) -> PyResult<EvalConfig> {
    let cfg = EvalConfig {
        top_k,
        viou_threshold,
        background_threshold,
    };
    cfg.validate().map_err(to_py_err)?;
    Ok(cfg)
}

/// Matching result for one video.
#[pyclass(name = "VideoMatch")]
struct PyVideoMatch {
    /// Average precision; `None` when the video has no ground truth.
    #[pyo3(get)]
    ap: Option<f64>,
    /// Matched ground-truth index per prediction, in input order. `None`
    /// marks unmatched predictions and those cut by `top_k`.
    #[pyo3(get)]
    assignments: Vec<Option<usize>>,
    #[pyo3(get)]
    n_ground_truth: usize,
    #[pyo3(get)]
    n_matched: usize,
    /// Predictions discarded by the `top_k` cut.
    #[pyo3(get)]
    truncated: usize,
}

#[pymethods]
impl PyVideoMatch {
    fn __repr__(&self) -> String {
        format!(
            "VideoMatch(ap {:?}, {}/{} matched)",
            self.ap, self.n_matched, self.n_ground_truth
        )
    }
}

/// Greedily match predictions against ground truth and score the video.
#[pyfunction(name = "match_video")]
#[pyo3(signature = (predictions, ground_truth, top_k=200, viou_threshold=0.5))]
fn py_match_video(
    predictions: Vec<PyPrediction>,
    ground_truth: Vec<PyRelationInstance>,
    top_k: usize,
    viou_threshold: f64,
) -> PyResult<PyVideoMatch> {
    let cfg = eval_config(top_k, viou_threshold, 0.1_f64.min(viou_threshold))?;
    let preds: Vec<Prediction> = predictions.into_iter().map(|p| p.inner).collect();
    let gts: Vec<RelationInstance> = ground_truth.into_iter().map(|g| g.inner).collect();
    let outcome = match_video(&preds, &gts, &cfg);
    let mut assignments = vec![None; preds.len()];
    for rec in &outcome.records {
        assignments[rec.input_index] = rec.matched_gt;
    }
    Ok(PyVideoMatch {
        ap: vrd_diagnose::evaluation::average_precision(&outcome.records, outcome.n_gt()),
        assignments,
        n_ground_truth: outcome.n_gt(),
        n_matched: outcome.n_matched(),
        truncated: outcome.truncated,
    })
}

/// Diagnosis of one video's false positives and missed ground truths.
#[pyclass(name = "VideoDiagnosis")]
struct PyVideoDiagnosis {
    #[pyo3(get)]
    ap: Option<f64>,
    /// Error verdict per prediction, in input order. `None` marks matched
    /// (true-positive) predictions and those cut by `top_k`; otherwise one
    /// of `classification`, `localization`, `confusion`,
    /// `double_detection`, `background`.
    #[pyo3(get)]
    verdicts: Vec<Option<String>>,
    /// Indices of ground truths no prediction matched.
    #[pyo3(get)]
    missed: Vec<usize>,
    #[pyo3(get)]
    n_ground_truth: usize,
}

#[pymethods]
impl PyVideoDiagnosis {
    fn __repr__(&self) -> String {
        format!(
            "VideoDiagnosis(ap {:?}, {} missed of {})",
            self.ap,
            self.missed.len(),
            self.n_ground_truth
        )
    }
}

/// Match one video and classify every unmatched prediction.
#[pyfunction(name = "diagnose_video")]
#[pyo3(signature = (predictions, ground_truth, top_k=200, viou_threshold=0.5, background_threshold=0.1))]
fn py_diagnose_video(
    predictions: Vec<PyPrediction>,
    ground_truth: Vec<PyRelationInstance>,
    top_k: usize,
    viou_threshold: f64,
    background_threshold: f64,
) -> PyResult<PyVideoDiagnosis> {
    let cfg = DiagnosisConfig {
        eval: eval_config(top_k, viou_threshold, background_threshold)?,
        ..DiagnosisConfig::default()
    };
    let preds: Vec<Prediction> = predictions.into_iter().map(|p| p.inner).collect();
    let gts: Vec<RelationInstance> = ground_truth.into_iter().map(|g| g.inner).collect();
    // Only the ground-truth list matters for verdicts; the remaining
    // annotation fields are untouched by per-video diagnosis.
    let ann = VideoAnnotation {
        video_id: String::new(),
        fps: 1.0,
        frame_count: gts.iter().map(|g| g.end_fid).max().unwrap_or(0),
        width: 0,
        height: 0,
        objects: BTreeMap::new(),
        ground_truth: gts,
    };
    let d = diagnose_video(&preds, &ann, &cfg);
    let mut verdicts = vec![None; preds.len()];
    for (rec, verdict) in d.outcome.records.iter().zip(&d.verdicts) {
        verdicts[rec.input_index] = (*verdict).map(|t| t.as_str().to_string());
    }
    Ok(PyVideoDiagnosis {
        ap: vrd_diagnose::evaluation::average_precision(&d.outcome.records, d.outcome.n_gt()),
        verdicts,
        missed: d.missed_gts.clone(),
        n_ground_truth: d.outcome.n_gt(),
    })
}

// ---------------------------------------------------------------------------
// File-level entry points
// ---------------------------------------------------------------------------

fn load_for_scoring(
    groundtruth: &Path,
    predictions: &Path,
    dataset: &str,
    default_fps: Option<f64>,
) -> PyResult<(vrd_diagnose::data_model::Dataset, vrd_diagnose::data_model::PredictionSet)> {
    let opts = GtLoadOptions {
        dataset_name: dataset.to_string(),
        split: "validation".to_string(),
        default_fps,
        ..GtLoadOptions::default()
    };
    let mut loaded = load_ground_truth(groundtruth, &opts).map_err(to_py_err)?;
    loaded.dataset.extend_vocab_from_observed();
    let preds = load_predictions(predictions, &loaded.dataset).map_err(to_py_err)?;
    Ok((loaded.dataset, preds.predictions))
}

/// Dataset-level evaluation summary.
#[pyclass(name = "Evaluation")]
struct PyEvaluation {
    #[pyo3(get)]
    mean_ap: f64,
    /// Per-video AP; `None` for videos without ground truth.
    #[pyo3(get)]
    per_video_ap: BTreeMap<String, Option<f64>>,
    #[pyo3(get)]
    n_videos_scored: usize,
    #[pyo3(get)]
    n_matched: usize,
    #[pyo3(get)]
    n_ground_truth: usize,
}

#[pymethods]
impl PyEvaluation {
    fn __repr__(&self) -> String {
        format!(
            "Evaluation(mAP {}, {} video(s))",
            self.mean_ap, self.n_videos_scored
        )
    }
}

/// Score a prediction file against a ground-truth directory or file.
#[pyfunction]
#[pyo3(signature = (groundtruth, predictions, dataset="custom", top_k=200, viou_threshold=0.5, default_fps=None))]
fn evaluate_files(
    groundtruth: PathBuf,
    predictions: PathBuf,
    dataset: &str,
    top_k: usize,
    viou_threshold: f64,
    default_fps: Option<f64>,
) -> PyResult<PyEvaluation> {
    let cfg = eval_config(top_k, viou_threshold, 0.1_f64.min(viou_threshold))?;
    let (gt, preds) = load_for_scoring(&groundtruth, &predictions, dataset, default_fps)?;
    let result = evaluate_dataset(&gt, &preds, &cfg).map_err(to_py_err)?;
    Ok(PyEvaluation {
        mean_ap: result.mean_ap,
        per_video_ap: result.per_video_ap,
        n_videos_scored: result.n_scorable,
        n_matched: result.n_matched,
        n_ground_truth: result.n_gt,
    })
}

/// Dataset-level error breakdown.
#[pyclass(name = "Diagnosis")]
struct PyDiagnosis {
    #[pyo3(get)]
    mean_ap: f64,
    /// False-positive and missed-ground-truth counts keyed by error name.
    #[pyo3(get)]
    error_counts: BTreeMap<String, usize>,
    #[pyo3(get)]
    n_ground_truth: usize,
    #[pyo3(get)]
    missed_ground_truth_ratio: f64,
}

#[pymethods]
impl PyDiagnosis {
    fn __repr__(&self) -> String {
        format!(
            "Diagnosis(mAP {}, missed ratio {})",
            self.mean_ap, self.missed_ground_truth_ratio
        )
    }
}

/// Score a prediction file and classify every false positive.
#[pyfunction]
#[pyo3(signature = (groundtruth, predictions, dataset="custom", top_k=200, viou_threshold=0.5, background_threshold=0.1, default_fps=None))]
fn diagnose_files(
    groundtruth: PathBuf,
    predictions: PathBuf,
    dataset: &str,
    top_k: usize,
    viou_threshold: f64,
    background_threshold: f64,
    default_fps: Option<f64>,
) -> PyResult<PyDiagnosis> {
    let cfg = DiagnosisConfig {
        eval: eval_config(top_k, viou_threshold, background_threshold)?,
        ..DiagnosisConfig::default()
    };
    let (gt, preds) = load_for_scoring(&groundtruth, &predictions, dataset, default_fps)?;
    let result = evaluate_dataset(&gt, &preds, &cfg.eval).map_err(to_py_err)?;
    let diagnosis = diagnose_dataset(&gt, &preds, &cfg).map_err(to_py_err)?;
    let n_gt = diagnosis.n_ground_truth();
    let error_counts: BTreeMap<String, usize> = diagnosis
        .error_counts()
        .into_iter()
        .map(|(t, n)| (t.as_str().to_string(), n))
        .collect();
    let missed = error_counts["missed_ground_truth"];
    Ok(PyDiagnosis {
        mean_ap: result.mean_ap,
        error_counts,
        n_ground_truth: n_gt,
        missed_ground_truth_ratio: if n_gt == 0 { 0.0 } else { missed as f64 / n_gt as f64 },
    })
}

/// Write a seeded synthetic fixture: a ground-truth directory plus a
/// prediction file with the requested per-video error injections.
///
/// Returns `(groundtruth_dir, predictions_path)`.
#[pyfunction]
#[pyo3(signature = (out, seed=7, videos=4, relations_per_video=6, classification=0, localization=0, confusion=0, double_detection=0, background=0, missed=0))]
#[allow(clippy::too_many_arguments)]
fn write_fixture(
    out: PathBuf,
    seed: u64,
    videos: usize,
    relations_per_video: usize,
    classification: usize,
    localization: usize,
    confusion: usize,
    double_detection: usize,
    background: usize,
    missed: usize,
) -> PyResult<(PathBuf, PathBuf)> {
    let dataset = generate_dataset(&DatasetParams {
        n_videos: videos,
        relations_per_video,
        seed,
        ..DatasetParams::default()
    })
    .map_err(to_py_err)?;
    let injected = perturb(
        &dataset,
        &InjectionSpec {
            classification,
            localization,
            confusion,
            double_detection,
            background,
            missed_ground_truths: missed,
            seed: seed.wrapping_add(1),
            ..InjectionSpec::default()
        },
    )
    .map_err(to_py_err)?;
    let gt_dir = out.join("gt");
    write_ground_truth_dir(&dataset, &gt_dir).map_err(to_py_err)?;
    let pred_path = out.join("predictions.json");
    write_predictions_file(&injected.predictions, &pred_path).map_err(to_py_err)?;
    Ok((gt_dir, pred_path))
}

#[pymodule]
fn _vrd_diagnose(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBoundingBox>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyTriplet>()?;
    m.add_class::<PyPrediction>()?;
    m.add_class::<PyRelationInstance>()?;
    m.add_class::<PyVideoMatch>()?;
    m.add_class::<PyVideoDiagnosis>()?;
    m.add_class::<PyEvaluation>()?;
    m.add_class::<PyDiagnosis>()?;
    m.add_function(wrap_pyfunction!(viou, m)?)?;
    m.add_function(wrap_pyfunction!(pair_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(py_match_video, m)?)?;
    m.add_function(wrap_pyfunction!(py_diagnose_video, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_files, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose_files, m)?)?;
    m.add_function(wrap_pyfunction!(write_fixture, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
