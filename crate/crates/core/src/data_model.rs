//! Domain types shared by every stage of the pipeline.
//!
//! Geometry is continuous and half-open: a box covers `[xmin, xmax) ×
//! [ymin, ymax)` so `area = (xmax - xmin) * (ymax - ymin)`, and a trajectory
//! covers the half-open frame interval `[begin_fid, begin_fid + len)`. All
//! types are immutable after construction and safe to share across workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BoundingBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        BoundingBox {
            xmin,
            ymin,
            xmax,
            ymax,
        }
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }

    /// Area of the intersection with `other`, 0 when disjoint.
    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = self.xmax.min(other.xmax) - self.xmin.max(other.xmin);
        let h = self.ymax.min(other.ymax) - self.ymin.max(other.ymin);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    /// True when the invariants hold: finite, non-negative, positive extent.
    pub fn is_valid(&self) -> bool {
        let coords = [self.xmin, self.ymin, self.xmax, self.ymax];
        coords.iter().all(|c| c.is_finite() && *c >= 0.0)
            && self.xmax > self.xmin
            && self.ymax > self.ymin
    }

    /// Clamp into `[0, width] × [0, height]`. Returns `None` when nothing
    /// of the box survives inside the frame.
    pub fn clamped(&self, width: f64, height: f64) -> Option<BoundingBox> {
        let b = BoundingBox {
            xmin: self.xmin.max(0.0),
            ymin: self.ymin.max(0.0),
            xmax: self.xmax.min(width),
            ymax: self.ymax.min(height),
        };
        (b.xmax > b.xmin && b.ymax > b.ymin).then_some(b)
    }
}

/// A tubelet: one box per consecutive frame starting at `begin_fid`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    begin_fid: i64,
    boxes: Vec<BoundingBox>,
}

impl Trajectory {
    /// Panics on an empty box list; emptiness is rejected at ingestion.
    pub fn new(begin_fid: i64, boxes: Vec<BoundingBox>) -> Self {
        assert!(!boxes.is_empty(), "trajectory must cover at least one frame");
        Trajectory { begin_fid, boxes }
    }

    pub fn begin_fid(&self) -> i64 {
        self.begin_fid
    }

    /// Exclusive end frame: `begin_fid + len`.
    pub fn end_fid(&self) -> i64 {
        self.begin_fid + self.boxes.len() as i64
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn boxes(&self) -> &[BoundingBox] {
        &self.boxes
    }

    pub fn box_at(&self, fid: i64) -> Option<&BoundingBox> {
        if fid < self.begin_fid {
            return None;
        }
        self.boxes.get((fid - self.begin_fid) as usize)
    }

    /// Unweighted mean of the per-frame box areas.
    pub fn mean_area(&self) -> f64 {
        self.boxes.iter().map(BoundingBox::area).sum::<f64>() / self.boxes.len() as f64
    }
}

/// ⟨subject, predicate, object⟩ label. Equality is atomic over all three.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triplet {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Triplet {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }
}

impl fmt::Display for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.subject, self.predicate, self.object)
    }
}

/// One ground-truth relation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationInstance {
    pub triplet: Triplet,
    pub subject_traj: Trajectory,
    pub object_traj: Trajectory,
    pub video_id: String,
    pub subject_tid: i64,
    pub object_tid: i64,
    pub begin_fid: i64,
    pub end_fid: i64,
}

/// One scored candidate relation from a detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub triplet: Triplet,
    pub score: f64,
    pub subject_traj: Trajectory,
    pub object_traj: Trajectory,
}

/// Per-video annotation container: object registry plus relation instances.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoAnnotation {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: i64,
    pub width: u32,
    pub height: u32,
    /// tid → object category.
    pub objects: BTreeMap<i64, String>,
    pub ground_truth: Vec<RelationInstance>,
}

/// Whole-dataset ground truth, keyed by video id. `BTreeMap` keeps every
/// traversal in lexicographic video order, which in turn keeps reports and
/// parallel reductions deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    /// Dataset family: `vidor`, `vidvrd`, or `custom`.
    pub name: String,
    /// Split label, e.g. `train` or `validation`. Informational only.
    pub split: String,
    pub videos: BTreeMap<String, VideoAnnotation>,
    /// Known object categories; always a superset of the observed labels.
    pub object_vocab: BTreeSet<String>,
    /// Known predicate categories; always a superset of the observed labels.
    pub predicate_vocab: BTreeSet<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    /// Every ground-truth instance in the dataset, in video order.
    pub fn instances(&self) -> impl Iterator<Item = &RelationInstance> {
        self.videos.values().flat_map(|v| v.ground_truth.iter())
    }

    /// Grow the vocabularies to cover every label observed in the ground
    /// truth, restoring the vocabulary invariant after videos are added.
    pub fn extend_vocab_from_observed(&mut self) {
        let mut objects = Vec::new();
        let mut predicates = Vec::new();
        for rel in self.instances() {
            objects.push(rel.triplet.subject.clone());
            objects.push(rel.triplet.object.clone());
            predicates.push(rel.triplet.predicate.clone());
        }
        self.object_vocab.extend(objects);
        self.predicate_vocab.extend(predicates);
    }
}

/// All predictions for a run, keyed by video id. Videos without predictions
/// simply have no entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSet {
    pub videos: BTreeMap<String, Vec<Prediction>>,
}

impl PredictionSet {
    pub fn for_video(&self, video_id: &str) -> &[Prediction] {
        self.videos.get(video_id).map_or(&[], Vec::as_slice)
    }

    pub fn total(&self) -> usize {
        self.videos.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// One violated invariant, naming the offending instance.
#[derive(Debug, Clone)]
pub struct ValidationFinding {
    pub severity: Severity,
    /// Short name of the violated invariant, e.g. `degenerate-box`.
    pub invariant: &'static str,
    pub video_id: String,
    /// Index into `ground_truth` when the finding concerns one instance.
    pub instance: Option<usize>,
    pub message: String,
}

impl fmt::Display for ValidationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} ({})", self.severity, self.message, self.invariant)
    }
}

fn finding(
    severity: Severity,
    invariant: &'static str,
    video_id: &str,
    instance: Option<usize>,
    message: String,
) -> ValidationFinding {
    ValidationFinding {
        severity,
        invariant,
        video_id: video_id.to_string(),
        instance,
        message,
    }
}

/// Check every invariant of a [`VideoAnnotation`]. Returns an empty list iff
/// all hold; out-of-frame boxes are reported as warnings, everything else as
/// errors.
pub fn validate(annotation: &VideoAnnotation) -> Vec<ValidationFinding> {
    let mut out = Vec::new();
    let vid = annotation.video_id.as_str();

    if !(annotation.fps.is_finite() && annotation.fps > 0.0) {
        out.push(finding(
            Severity::Error,
            "fps-positive",
            vid,
            None,
            format!("video '{vid}': fps must be finite and > 0, got {}", annotation.fps),
        ));
    }
    if annotation.frame_count < 0 {
        out.push(finding(
            Severity::Error,
            "frame-count-non-negative",
            vid,
            None,
            format!("video '{vid}': negative frame_count {}", annotation.frame_count),
        ));
    }
    if annotation.width == 0 || annotation.height == 0 {
        out.push(finding(
            Severity::Error,
            "frame-size-positive",
            vid,
            None,
            format!(
                "video '{vid}': zero frame dimension {}x{}",
                annotation.width, annotation.height
            ),
        ));
    }

    for (idx, rel) in annotation.ground_truth.iter().enumerate() {
        let ctx = format!("video '{vid}' relation {idx} {}", rel.triplet);
        if rel.begin_fid < 0 || rel.end_fid <= rel.begin_fid {
            out.push(finding(
                Severity::Error,
                "interval-ordered",
                vid,
                Some(idx),
                format!("{ctx}: bad frame interval [{}, {})", rel.begin_fid, rel.end_fid),
            ));
        }
        for (role, tid) in [("subject", rel.subject_tid), ("object", rel.object_tid)] {
            if !annotation.objects.contains_key(&tid) {
                out.push(finding(
                    Severity::Error,
                    "tid-registered",
                    vid,
                    Some(idx),
                    format!("{ctx}: {role} tid {tid} missing from object registry"),
                ));
            }
        }
        for (role, traj) in [("subject", &rel.subject_traj), ("object", &rel.object_traj)] {
            if traj.begin_fid() != rel.begin_fid || traj.end_fid() != rel.end_fid {
                out.push(finding(
                    Severity::Error,
                    "trajectory-interval-match",
                    vid,
                    Some(idx),
                    format!(
                        "{ctx}: {role} trajectory covers [{}, {}) but the instance declares [{}, {})",
                        traj.begin_fid(),
                        traj.end_fid(),
                        rel.begin_fid,
                        rel.end_fid
                    ),
                ));
            }
            for (offset, b) in traj.boxes().iter().enumerate() {
                if !b.is_valid() {
                    out.push(finding(
                        Severity::Error,
                        "degenerate-box",
                        vid,
                        Some(idx),
                        format!(
                            "{ctx}: {role} box at frame {} is degenerate or non-finite: {b:?}",
                            traj.begin_fid() + offset as i64
                        ),
                    ));
                } else if b.xmax > annotation.width as f64 || b.ymax > annotation.height as f64 {
                    out.push(finding(
                        Severity::Warning,
                        "box-within-frame",
                        vid,
                        Some(idx),
                        format!(
                            "{ctx}: {role} box at frame {} exceeds the {}x{} frame: {b:?}",
                            traj.begin_fid() + offset as i64,
                            annotation.width,
                            annotation.height
                        ),
                    ));
                }
            }
        }
    }
    out
}
