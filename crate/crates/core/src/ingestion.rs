//! Readers and writers for the on-disk annotation and prediction formats,
//! plus the category taxonomies.
//!
//! Ground truth follows the public per-video annotation convention: an
//! object registry (`"subject/objects"`), per-frame box lists
//! (`"trajectories"`, outer index = frame id), and `"relation_instances"`
//! referencing registry tids over half-open frame intervals. Predictions
//! arrive as one aggregate JSON file keyed by video id. Both formats can be
//! written back out, so generated fixtures double as format-conformance
//! inputs and loaded data round-trips losslessly.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_model::{
    BoundingBox, Dataset, Prediction, PredictionSet, RelationInstance, Trajectory, Triplet,
    VideoAnnotation,
};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// File-format shapes (serde only; domain types stay serialization-free)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct GtFile {
    video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fps: Option<f64>,
    frame_count: i64,
    width: u32,
    height: u32,
    #[serde(rename = "subject/objects")]
    subject_objects: Vec<GtObject>,
    trajectories: Vec<Vec<GtFrameBox>>,
    relation_instances: Vec<GtRelation>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtObject {
    tid: i64,
    category: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtFrameBox {
    tid: i64,
    bbox: GtBox,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtBox {
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtRelation {
    subject_tid: i64,
    object_tid: i64,
    predicate: String,
    begin_fid: i64,
    end_fid: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredFile {
    results: BTreeMap<String, Vec<PredRecord>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredRecord {
    triplet: [String; 3],
    score: f64,
    duration: [i64; 2],
    sub_traj: Vec<[f64; 4]>,
    obj_traj: Vec<[f64; 4]>,
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

/// How to interpret ground-truth files.
#[derive(Debug, Clone, Default)]
pub struct GtLoadOptions {
    /// Dataset family recorded on the result: `vidor`, `vidvrd`, `custom`.
    pub dataset_name: String,
    /// Split label recorded on the result, e.g. `validation`.
    pub split: String,
    /// Used for videos whose file omits `fps`; loading fails without it.
    pub default_fps: Option<f64>,
    /// Explicit vocabularies; when absent the vocabulary is the union of
    /// observed labels.
    pub object_vocab: Option<BTreeSet<String>>,
    pub predicate_vocab: Option<BTreeSet<String>>,
}

/// A loaded dataset plus non-fatal observations made while loading.
#[derive(Debug)]
pub struct LoadedGroundTruth {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

/// Load ground truth from a directory of per-video JSON files or a single
/// file (one video as an object, or an aggregate as a JSON array of videos).
pub fn load_ground_truth(path: &Path, opts: &GtLoadOptions) -> Result<LoadedGroundTruth> {
    let files = if path.is_dir() {
        annotation_files(path)?
    } else {
        vec![path.to_path_buf()]
    };

    // Parse in parallel, then merge in sorted path order so failures and
    // results are independent of scheduling.
    let parsed: Vec<Result<Vec<GtFile>>> = files.par_iter().map(|f| parse_gt_file(f)).collect();

    let mut dataset = Dataset {
        name: opts.dataset_name.clone(),
        split: opts.split.clone(),
        ..Dataset::default()
    };
    let mut warnings = Vec::new();
    for (file, result) in files.iter().zip(parsed) {
        for gt in result? {
            let video_id = gt.video_id.clone();
            if dataset.videos.contains_key(&video_id) {
                return Err(Error::DuplicateVideo(video_id));
            }
            let ann = build_annotation(gt, file, opts, &mut warnings)?;
            dataset.videos.insert(video_id, ann);
        }
    }

    if let Some(v) = &opts.object_vocab {
        dataset.object_vocab = v.clone();
    }
    if let Some(v) = &opts.predicate_vocab {
        dataset.predicate_vocab = v.clone();
    }
    dataset.extend_vocab_from_observed();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(LoadedGroundTruth { dataset, warnings })
}

fn annotation_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            Error::io(
                dir,
                e.into_io_error()
                    .unwrap_or_else(|| std::io::Error::other("walk failed")),
            )
        })?;
        if entry.file_type().is_file()
            && entry.path().extension().is_some_and(|e| e == "json")
        {
            files.push(entry.into_path());
        }
    }
    files.sort();
    Ok(files)
}

fn parse_gt_file(path: &Path) -> Result<Vec<GtFile>> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    let first = text.trim_start().bytes().next();
    match first {
        Some(b'[') => serde_json::from_str::<Vec<GtFile>>(&text)
            .map_err(|e| Error::parse(path, e.to_string())),
        Some(b'{') => serde_json::from_str::<GtFile>(&text)
            .map(|g| vec![g])
            .map_err(|e| Error::parse(path, e.to_string())),
        _ => Err(Error::parse(
            path,
            "expected a JSON object (one video) or array (aggregate)",
        )),
    }
}

fn build_annotation(
    gt: GtFile,
    file: &Path,
    opts: &GtLoadOptions,
    warnings: &mut Vec<String>,
) -> Result<VideoAnnotation> {
    let video_id = gt.video_id;
    let fps = match gt.fps.or(opts.default_fps) {
        Some(f) if f.is_finite() && f > 0.0 => f,
        Some(f) => {
            return Err(Error::parse(
                file,
                format!("video '{video_id}': fps must be finite and positive, got {f}"),
            ))
        }
        None => return Err(Error::MissingFps { video_id }),
    };

    let mut objects = BTreeMap::new();
    for o in &gt.subject_objects {
        if objects.insert(o.tid, o.category.clone()).is_some() {
            return Err(Error::parse(
                file,
                format!("video '{video_id}': tid {} registered twice", o.tid),
            ));
        }
    }

    // tid → (fid → clamped box), with a tally of clamped boxes.
    let mut by_tid: BTreeMap<i64, BTreeMap<i64, BoundingBox>> = BTreeMap::new();
    let mut clamped_boxes = 0usize;
    let (w, h) = (gt.width as f64, gt.height as f64);
    for (fid, frame) in gt.trajectories.iter().enumerate() {
        for fb in frame {
            let raw = BoundingBox::new(fb.bbox.xmin, fb.bbox.ymin, fb.bbox.xmax, fb.bbox.ymax);
            if !raw.xmin.is_finite()
                || !raw.ymin.is_finite()
                || !raw.xmax.is_finite()
                || !raw.ymax.is_finite()
            {
                return Err(Error::parse(
                    file,
                    format!(
                        "video '{video_id}': non-finite box for tid {} at frame {fid}",
                        fb.tid
                    ),
                ));
            }
            let clamped = raw.clamped(w, h).ok_or_else(|| {
                Error::parse(
                    file,
                    format!(
                        "video '{video_id}': box for tid {} at frame {fid} lies entirely \
                         outside the {w}x{h} frame or is degenerate: {raw:?}",
                        fb.tid
                    ),
                )
            })?;
            if clamped != raw {
                clamped_boxes += 1;
            }
            by_tid.entry(fb.tid).or_default().insert(fid as i64, clamped);
        }
    }
    if clamped_boxes > 0 {
        warnings.push(format!(
            "video '{video_id}': clamped {clamped_boxes} box(es) to the {w}x{h} frame"
        ));
    }

    let mut ground_truth = Vec::with_capacity(gt.relation_instances.len());
    for (index, rel) in gt.relation_instances.iter().enumerate() {
        if rel.end_fid <= rel.begin_fid || rel.begin_fid < 0 {
            return Err(Error::parse(
                file,
                format!(
                    "video '{video_id}': relation {index} has bad interval [{}, {})",
                    rel.begin_fid, rel.end_fid
                ),
            ));
        }
        let role_traj = |tid: i64| -> Result<(Trajectory, String)> {
            let category = objects.get(&tid).cloned().ok_or(Error::UnknownTid {
                video_id: video_id.clone(),
                index,
                tid,
            })?;
            let frames = by_tid.get(&tid).ok_or(Error::MissingFrameBox {
                video_id: video_id.clone(),
                tid,
                fid: rel.begin_fid,
                begin: rel.begin_fid,
                end: rel.end_fid,
            })?;
            let mut boxes = Vec::with_capacity((rel.end_fid - rel.begin_fid) as usize);
            for fid in rel.begin_fid..rel.end_fid {
                let b = frames.get(&fid).ok_or(Error::MissingFrameBox {
                    video_id: video_id.clone(),
                    tid,
                    fid,
                    begin: rel.begin_fid,
                    end: rel.end_fid,
                })?;
                boxes.push(*b);
            }
            Ok((Trajectory::new(rel.begin_fid, boxes), category))
        };
        let (subject_traj, subject) = role_traj(rel.subject_tid)?;
        let (object_traj, object) = role_traj(rel.object_tid)?;
        ground_truth.push(RelationInstance {
            triplet: Triplet::new(subject, rel.predicate.clone(), object),
            subject_traj,
            object_traj,
            video_id: video_id.clone(),
            subject_tid: rel.subject_tid,
            object_tid: rel.object_tid,
            begin_fid: rel.begin_fid,
            end_fid: rel.end_fid,
        });
    }

    Ok(VideoAnnotation {
        video_id,
        fps,
        frame_count: gt.frame_count,
        width: gt.width,
        height: gt.height,
        objects,
        ground_truth,
    })
}

/// Write one annotation file per video (`<video_id>.json`) into `dir`,
/// reconstructing the per-frame trajectory lists from the relation
/// instances. Fails if two instances disagree about a tid's box on a frame,
/// since that cannot be represented in the format.
pub fn write_ground_truth_dir(dataset: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (vid, ann) in &dataset.videos {
        let path = dir.join(format!("{vid}.json"));
        let file = gt_file_of(ann)?;
        let out = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(out);
        serde_json::to_writer(&mut w, &file).map_err(|e| Error::parse(&path, e.to_string()))?;
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn gt_file_of(ann: &VideoAnnotation) -> Result<GtFile> {
    let mut frames: BTreeMap<i64, BTreeMap<i64, BoundingBox>> = BTreeMap::new();
    let mut max_end = ann.frame_count;
    for rel in &ann.ground_truth {
        for (tid, traj) in [
            (rel.subject_tid, &rel.subject_traj),
            (rel.object_tid, &rel.object_traj),
        ] {
            max_end = max_end.max(traj.end_fid());
            for (off, b) in traj.boxes().iter().enumerate() {
                let fid = traj.begin_fid() + off as i64;
                let slot = frames.entry(fid).or_default();
                if let Some(prev) = slot.get(&tid) {
                    if prev != b {
                        return Err(Error::Config(format!(
                            "video '{}': tid {tid} carries conflicting boxes at frame \
                             {fid}; cannot serialize to the per-tid annotation format",
                            ann.video_id
                        )));
                    }
                } else {
                    slot.insert(tid, *b);
                }
            }
        }
    }
    let trajectories = (0..max_end)
        .map(|fid| {
            frames
                .get(&fid)
                .map(|slot| {
                    slot.iter()
                        .map(|(tid, b)| GtFrameBox {
                            tid: *tid,
                            bbox: GtBox {
                                xmin: b.xmin,
                                ymin: b.ymin,
                                xmax: b.xmax,
                                ymax: b.ymax,
                            },
                        })
                        .collect()
                })
                .unwrap_or_default()
        })
        .collect();
    Ok(GtFile {
        video_id: ann.video_id.clone(),
        fps: Some(ann.fps),
        frame_count: ann.frame_count,
        width: ann.width,
        height: ann.height,
        subject_objects: ann
            .objects
            .iter()
            .map(|(tid, category)| GtObject {
                tid: *tid,
                category: category.clone(),
            })
            .collect(),
        trajectories,
        relation_instances: ann
            .ground_truth
            .iter()
            .map(|rel| GtRelation {
                subject_tid: rel.subject_tid,
                object_tid: rel.object_tid,
                predicate: rel.triplet.predicate.clone(),
                begin_fid: rel.begin_fid,
                end_fid: rel.end_fid,
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

/// A loaded prediction set plus everything set aside or flagged on the way.
#[derive(Debug)]
pub struct LoadedPredictions {
    pub predictions: PredictionSet,
    /// video id → number of records set aside because the id is not in the
    /// companion dataset.
    pub unknown_videos: BTreeMap<String, usize>,
    /// Predictions whose subject, predicate, or object is outside the
    /// dataset vocabulary. Kept — they simply can never match.
    pub out_of_vocab: usize,
    pub warnings: Vec<String>,
}

/// Load the aggregate prediction file, checking each record against the
/// companion dataset.
pub fn load_predictions(path: &Path, dataset: &Dataset) -> Result<LoadedPredictions> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed: PredFile = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::parse(path, e.to_string()))?;

    let mut predictions = PredictionSet::default();
    let mut unknown_videos = BTreeMap::new();
    let mut out_of_vocab = 0usize;
    let mut warnings = Vec::new();

    for (video_id, records) in parsed.results {
        if !dataset.videos.contains_key(&video_id) {
            *unknown_videos.entry(video_id).or_insert(0) += records.len();
            continue;
        }
        let mut preds = Vec::with_capacity(records.len());
        for (index, rec) in records.into_iter().enumerate() {
            preds.push(build_prediction(rec, &video_id, index, dataset, &mut out_of_vocab)?);
        }
        predictions.videos.insert(video_id, preds);
    }

    for (vid, n) in &unknown_videos {
        warnings.push(format!(
            "predictions for unknown video '{vid}' set aside ({n} record(s))"
        ));
    }
    if out_of_vocab > 0 {
        warnings.push(format!(
            "{out_of_vocab} prediction(s) carry labels outside the dataset vocabulary; \
             kept, but they can never match"
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(LoadedPredictions {
        predictions,
        unknown_videos,
        out_of_vocab,
        warnings,
    })
}

fn build_prediction(
    rec: PredRecord,
    video_id: &str,
    index: usize,
    dataset: &Dataset,
    out_of_vocab: &mut usize,
) -> Result<Prediction> {
    let bad = |message: String| Error::BadPrediction {
        video_id: video_id.to_string(),
        index,
        message,
    };
    if !rec.score.is_finite() {
        return Err(bad(format!("non-finite score {}", rec.score)));
    }
    let [begin, end] = rec.duration;
    let len = end - begin;
    if len <= 0 {
        return Err(bad(format!("empty duration [{begin}, {end})")));
    }
    for (name, traj) in [("sub_traj", &rec.sub_traj), ("obj_traj", &rec.obj_traj)] {
        if traj.len() as i64 != len {
            return Err(bad(format!(
                "{name} holds {} box(es) but duration [{begin}, {end}) spans {len} frame(s)",
                traj.len()
            )));
        }
        if traj.iter().flatten().any(|c| !c.is_finite()) {
            return Err(bad(format!("{name} contains a non-finite coordinate")));
        }
    }
    let [subject, predicate, object] = rec.triplet;
    if !dataset.object_vocab.contains(&subject)
        || !dataset.predicate_vocab.contains(&predicate)
        || !dataset.object_vocab.contains(&object)
    {
        *out_of_vocab += 1;
    }
    let to_traj = |boxes: &[[f64; 4]]| {
        Trajectory::new(
            begin,
            boxes
                .iter()
                .map(|b| BoundingBox::new(b[0], b[1], b[2], b[3]))
                .collect(),
        )
    };
    Ok(Prediction {
        triplet: Triplet::new(subject, predicate, object),
        score: rec.score,
        subject_traj: to_traj(&rec.sub_traj),
        object_traj: to_traj(&rec.obj_traj),
    })
}

/// Write predictions as one aggregate JSON file.
pub fn write_predictions_file(preds: &PredictionSet, path: &Path) -> Result<()> {
    let results = preds
        .videos
        .iter()
        .map(|(vid, list)| {
            let records = list
                .iter()
                .map(|p| PredRecord {
                    triplet: [
                        p.triplet.subject.clone(),
                        p.triplet.predicate.clone(),
                        p.triplet.object.clone(),
                    ],
                    score: p.score,
                    duration: [p.subject_traj.begin_fid(), p.subject_traj.end_fid()],
                    sub_traj: boxes_of(&p.subject_traj),
                    obj_traj: boxes_of(&p.object_traj),
                })
                .collect();
            (vid.clone(), records)
        })
        .collect();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let out = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(out);
    serde_json::to_writer(&mut w, &PredFile { results })
        .map_err(|e| Error::parse(path, e.to_string()))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn boxes_of(t: &Trajectory) -> Vec<[f64; 4]> {
    t.boxes()
        .iter()
        .map(|b| [b.xmin, b.ymin, b.xmax, b.ymax])
        .collect()
}

// ---------------------------------------------------------------------------
// Taxonomies
// ---------------------------------------------------------------------------

/// Kind of a predicate in the action/spatial split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredicateKind {
    Action,
    Spatial,
}

impl PredicateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PredicateKind::Action => "action",
            PredicateKind::Spatial => "spatial",
        }
    }
}

/// Label used for object categories outside the super-category map.
pub const FALLBACK_SUPERCATEGORY: &str = "other";

/// Coarse grouping of both vocabularies: object category → super category
/// and predicate → action/spatial kind. Lookups fall back (`other` /
/// unknown) rather than fail, so the maps behave as total functions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Taxonomy {
    pub supercategories: BTreeMap<String, String>,
    pub predicate_kinds: BTreeMap<String, PredicateKind>,
}

impl Taxonomy {
    /// Super category of `label`, or [`FALLBACK_SUPERCATEGORY`] when the
    /// label is unmapped.
    pub fn supercategory_of<'a>(&'a self, label: &str) -> &'a str {
        self.supercategories
            .get(label)
            .map_or(FALLBACK_SUPERCATEGORY, String::as_str)
    }

    pub fn is_mapped_object(&self, label: &str) -> bool {
        self.supercategories.contains_key(label)
    }

    /// Predicate kind, or `None` for unmapped predicates (reported as
    /// `unknown` downstream).
    pub fn kind_of(&self, label: &str) -> Option<PredicateKind> {
        self.predicate_kinds.get(label).copied()
    }

    /// All super categories that appear in the map, plus the fallback.
    pub fn known_supercategories(&self) -> BTreeSet<String> {
        let mut set: BTreeSet<String> = self.supercategories.values().cloned().collect();
        set.insert(FALLBACK_SUPERCATEGORY.to_string());
        set
    }
}

const VIDOR_OBJECTS: &str = include_str!("../data/vidor_objects.csv");
const VIDOR_PREDICATES: &str = include_str!("../data/vidor_predicates.csv");
const VIDVRD_OBJECTS: &str = include_str!("../data/vidvrd_objects.csv");
const VIDVRD_PREDICATES: &str = include_str!("../data/vidvrd_predicates.csv");

/// Load one of the shipped taxonomies: `vidor` or `vidvrd`.
pub fn load_builtin_taxonomy(name: &str) -> Result<Taxonomy> {
    let (objects, predicates) = match name {
        "vidor" => (VIDOR_OBJECTS, VIDOR_PREDICATES),
        "vidvrd" => (VIDVRD_OBJECTS, VIDVRD_PREDICATES),
        other => return Err(Error::UnknownBuiltin(other.to_string())),
    };
    let origin = format!("builtin:{name}");
    Ok(Taxonomy {
        supercategories: parse_two_column_csv(objects, &origin)?,
        predicate_kinds: parse_kind_csv(predicates, &origin)?,
    })
}

/// Load a taxonomy from two CSV files (`label,group` with a header row).
pub fn load_taxonomy_files(objects_csv: &Path, predicates_csv: &Path) -> Result<Taxonomy> {
    let read = |p: &Path| -> Result<String> {
        std::fs::read_to_string(p).map_err(|e| Error::io(p, e))
    };
    Ok(Taxonomy {
        supercategories: parse_two_column_csv(
            &read(objects_csv)?,
            &objects_csv.display().to_string(),
        )?,
        predicate_kinds: parse_kind_csv(
            &read(predicates_csv)?,
            &predicates_csv.display().to_string(),
        )?,
    })
}

fn parse_two_column_csv(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(origin, e.to_string()))?;
        if record.len() != 2 {
            return Err(Error::parse(
                origin,
                format!("expected 2 columns (label,group), got {}", record.len()),
            ));
        }
        if out
            .insert(record[0].to_string(), record[1].to_string())
            .is_some()
        {
            return Err(Error::parse(
                origin,
                format!("label '{}' mapped twice", &record[0]),
            ));
        }
    }
    Ok(out)
}

fn parse_kind_csv(text: &str, origin: &str) -> Result<BTreeMap<String, PredicateKind>> {
    parse_two_column_csv(text, origin)?
        .into_iter()
        .map(|(label, kind)| {
            let kind = match kind.as_str() {
                "action" | "action-based" => PredicateKind::Action,
                "spatial" => PredicateKind::Spatial,
                other => {
                    return Err(Error::parse(
                        origin,
                        format!(
                            "predicate '{label}': unknown kind '{other}' \
                             (expected action or spatial)"
                        ),
                    ))
                }
            };
            Ok((label, kind))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn sample_gt_json(video_id: &str) -> serde_json::Value {
        serde_json::json!({
            "video_id": video_id,
            "fps": 25.0,
            "frame_count": 40,
            "width": 640,
            "height": 480,
            "subject/objects": [
                {"tid": 0, "category": "dog"},
                {"tid": 1, "category": "cat"}
            ],
            "trajectories": (0..40).map(|fid| {
                serde_json::json!([
                    {"tid": 0, "bbox": {"xmin": 10.0 + fid as f64, "ymin": 20.0,
                                         "xmax": 60.0 + fid as f64, "ymax": 80.0}},
                    {"tid": 1, "bbox": {"xmin": 200.0, "ymin": 100.0,
                                         "xmax": 260.0, "ymax": 180.0}}
                ])
            }).collect::<Vec<_>>(),
            "relation_instances": [
                {"subject_tid": 0, "object_tid": 1, "predicate": "chase",
                 "begin_fid": 0, "end_fid": 30}
            ]
        })
    }

    fn opts() -> GtLoadOptions {
        GtLoadOptions {
            dataset_name: "custom".into(),
            split: "test".into(),
            ..GtLoadOptions::default()
        }
    }

    fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
        path
    }

    #[test]
    fn loads_a_directory_of_annotations() {
        let dir = TempDir::new().unwrap();
        write_json(dir.path(), "a.json", &sample_gt_json("v_a"));
        write_json(dir.path(), "b.json", &sample_gt_json("v_b"));
        let loaded = load_ground_truth(dir.path(), &opts()).unwrap();
        assert_eq!(loaded.dataset.len(), 2);
        let ann = &loaded.dataset.videos["v_a"];
        assert_eq!(ann.ground_truth.len(), 1);
        let rel = &ann.ground_truth[0];
        assert_eq!(rel.triplet, Triplet::new("dog", "chase", "cat"));
        assert_eq!(rel.subject_traj.begin_fid(), 0);
        assert_eq!(rel.subject_traj.end_fid(), 30);
        assert_eq!(rel.subject_traj.box_at(5).unwrap().xmin, 15.0);
        assert_eq!(
            loaded.dataset.predicate_vocab,
            BTreeSet::from(["chase".to_string()])
        );
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn empty_directory_yields_empty_dataset() {
        let dir = TempDir::new().unwrap();
        let loaded = load_ground_truth(dir.path(), &opts()).unwrap();
        assert!(loaded.dataset.is_empty());
    }

    #[test]
    fn duplicate_video_id_is_an_error() {
        let dir = TempDir::new().unwrap();
        write_json(dir.path(), "a.json", &sample_gt_json("v_dup"));
        write_json(dir.path(), "b.json", &sample_gt_json("v_dup"));
        match load_ground_truth(dir.path(), &opts()) {
            Err(Error::DuplicateVideo(v)) => assert_eq!(v, "v_dup"),
            other => panic!("expected DuplicateVideo, got {other:?}"),
        }
    }

    #[test]
    fn unknown_tid_is_an_error_naming_the_tid() {
        let dir = TempDir::new().unwrap();
        let mut bad = sample_gt_json("v_bad");
        bad["relation_instances"][0]["subject_tid"] = serde_json::json!(42);
        write_json(dir.path(), "bad.json", &bad);
        match load_ground_truth(dir.path(), &opts()) {
            Err(Error::UnknownTid { tid, .. }) => assert_eq!(tid, 42),
            other => panic!("expected UnknownTid, got {other:?}"),
        }
    }

    #[test]
    fn missing_frame_box_is_an_error() {
        let dir = TempDir::new().unwrap();
        let mut bad = sample_gt_json("v_gap");
        // Relation spans [0, 30) but tid 0 vanishes from frame 10 on.
        let frames = bad["trajectories"].as_array_mut().unwrap();
        for f in frames.iter_mut().skip(10) {
            f.as_array_mut().unwrap().remove(0);
        }
        write_json(dir.path(), "gap.json", &bad);
        match load_ground_truth(dir.path(), &opts()) {
            Err(Error::MissingFrameBox { tid, fid, .. }) => {
                assert_eq!(tid, 0);
                assert_eq!(fid, 10);
            }
            other => panic!("expected MissingFrameBox, got {other:?}"),
        }
    }

    #[test]
    fn missing_fps_requires_a_default() {
        let dir = TempDir::new().unwrap();
        let mut no_fps = sample_gt_json("v_nofps");
        no_fps.as_object_mut().unwrap().remove("fps");
        write_json(dir.path(), "v.json", &no_fps);
        match load_ground_truth(dir.path(), &opts()) {
            Err(Error::MissingFps { video_id }) => assert_eq!(video_id, "v_nofps"),
            other => panic!("expected MissingFps, got {other:?}"),
        }
        let with_default = GtLoadOptions {
            default_fps: Some(30.0),
            ..opts()
        };
        let loaded = load_ground_truth(dir.path(), &with_default).unwrap();
        assert_eq!(loaded.dataset.videos["v_nofps"].fps, 30.0);
    }

    #[test]
    fn out_of_frame_boxes_are_clamped_with_a_warning() {
        let dir = TempDir::new().unwrap();
        let mut wide = sample_gt_json("v_wide");
        wide["trajectories"][0][1]["bbox"]["xmax"] = serde_json::json!(700.0);
        write_json(dir.path(), "v.json", &wide);
        let loaded = load_ground_truth(dir.path(), &opts()).unwrap();
        assert_eq!(loaded.warnings.len(), 1);
        assert!(loaded.warnings[0].contains("clamped 1 box"));
        // Frame 0 of the relation is unaffected (tid 0); check via tid 1's
        // use as object: its frame-0 box was the clamped one.
        let rel = &loaded.dataset.videos["v_wide"].ground_truth[0];
        assert_eq!(rel.object_traj.box_at(0).unwrap().xmax, 640.0);
    }

    #[test]
    fn aggregate_array_files_load_too() {
        let dir = TempDir::new().unwrap();
        let agg = serde_json::json!([sample_gt_json("v_1"), sample_gt_json("v_2")]);
        let path = write_json(dir.path(), "all.json", &agg);
        let loaded = load_ground_truth(&path, &opts()).unwrap();
        assert_eq!(loaded.dataset.len(), 2);
    }

    #[test]
    fn ground_truth_round_trips_through_the_writer() {
        let dir = TempDir::new().unwrap();
        write_json(dir.path(), "a.json", &sample_gt_json("v_a"));
        write_json(dir.path(), "b.json", &sample_gt_json("v_b"));
        let loaded = load_ground_truth(dir.path(), &opts()).unwrap();

        let out = TempDir::new().unwrap();
        write_ground_truth_dir(&loaded.dataset, out.path()).unwrap();
        let reloaded = load_ground_truth(out.path(), &opts()).unwrap();
        assert_eq!(loaded.dataset, reloaded.dataset);
    }

    fn sample_pred_json(video_id: &str) -> serde_json::Value {
        serde_json::json!({
            "results": {
                video_id: [{
                    "triplet": ["dog", "chase", "cat"],
                    "score": 0.9,
                    "duration": [0, 30],
                    "sub_traj": (0..30).map(|fid| {
                        [10.0 + fid as f64, 20.0, 60.0 + fid as f64, 80.0]
                    }).collect::<Vec<_>>(),
                    "obj_traj": (0..30).map(|_| [200.0, 100.0, 260.0, 180.0])
                        .collect::<Vec<_>>(),
                }]
            }
        })
    }

    fn loaded_dataset() -> Dataset {
        let dir = TempDir::new().unwrap();
        write_json(dir.path(), "a.json", &sample_gt_json("v_a"));
        load_ground_truth(dir.path(), &opts()).unwrap().dataset
    }

    #[test]
    fn predictions_load_and_match_the_format() {
        let dir = TempDir::new().unwrap();
        let path = write_json(dir.path(), "preds.json", &sample_pred_json("v_a"));
        let dataset = loaded_dataset();
        let loaded = load_predictions(&path, &dataset).unwrap();
        assert_eq!(loaded.predictions.total(), 1);
        assert_eq!(loaded.out_of_vocab, 0);
        let p = &loaded.predictions.for_video("v_a")[0];
        assert_eq!(p.subject_traj.len(), 30);
        assert_eq!(p.subject_traj.begin_fid(), 0);
    }

    #[test]
    fn trajectory_duration_mismatch_is_a_per_record_error() {
        let dir = TempDir::new().unwrap();
        let mut bad = sample_pred_json("v_a");
        bad["results"]["v_a"][0]["sub_traj"]
            .as_array_mut()
            .unwrap()
            .pop();
        let path = write_json(dir.path(), "preds.json", &bad);
        match load_predictions(&path, &loaded_dataset()) {
            Err(Error::BadPrediction { index, message, .. }) => {
                assert_eq!(index, 0);
                assert!(message.contains("29 box(es)"), "{message}");
            }
            other => panic!("expected BadPrediction, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_scores_and_empty_durations_are_rejected() {
        let dir = TempDir::new().unwrap();
        let mut nan = sample_pred_json("v_a");
        nan["results"]["v_a"][0]["score"] = serde_json::json!(null);
        let path = write_json(dir.path(), "nan.json", &nan);
        // null score fails at deserialization already (f64 required).
        assert!(load_predictions(&path, &loaded_dataset()).is_err());

        let mut empty = sample_pred_json("v_a");
        empty["results"]["v_a"][0]["duration"] = serde_json::json!([5, 5]);
        empty["results"]["v_a"][0]["sub_traj"] = serde_json::json!([]);
        empty["results"]["v_a"][0]["obj_traj"] = serde_json::json!([]);
        let path = write_json(dir.path(), "empty.json", &empty);
        match load_predictions(&path, &loaded_dataset()) {
            Err(Error::BadPrediction { message, .. }) => {
                assert!(message.contains("empty duration"), "{message}")
            }
            other => panic!("expected BadPrediction, got {other:?}"),
        }
    }

    #[test]
    fn unknown_video_ids_are_set_aside_not_fatal() {
        let dir = TempDir::new().unwrap();
        let path = write_json(dir.path(), "preds.json", &sample_pred_json("v_ghost"));
        let loaded = load_predictions(&path, &loaded_dataset()).unwrap();
        assert_eq!(loaded.predictions.total(), 0);
        assert_eq!(loaded.unknown_videos["v_ghost"], 1);
        assert!(loaded.warnings[0].contains("v_ghost"));
    }

    #[test]
    fn out_of_vocab_labels_are_kept_and_counted() {
        let dir = TempDir::new().unwrap();
        let mut odd = sample_pred_json("v_a");
        odd["results"]["v_a"][0]["triplet"] = serde_json::json!(["dog", "teleport", "cat"]);
        let path = write_json(dir.path(), "preds.json", &odd);
        let loaded = load_predictions(&path, &loaded_dataset()).unwrap();
        assert_eq!(loaded.predictions.total(), 1);
        assert_eq!(loaded.out_of_vocab, 1);
    }

    #[test]
    fn predictions_round_trip_through_the_writer() {
        let dir = TempDir::new().unwrap();
        let path = write_json(dir.path(), "preds.json", &sample_pred_json("v_a"));
        let dataset = loaded_dataset();
        let loaded = load_predictions(&path, &dataset).unwrap();

        let out = dir.path().join("rewritten.json");
        write_predictions_file(&loaded.predictions, &out).unwrap();
        let reloaded = load_predictions(&out, &dataset).unwrap();
        assert_eq!(loaded.predictions, reloaded.predictions);
    }

    #[test]
    fn builtin_taxonomies_have_exact_vocabulary_sizes() {
        let vidor = load_builtin_taxonomy("vidor").unwrap();
        assert_eq!(vidor.supercategories.len(), 80);
        assert_eq!(vidor.predicate_kinds.len(), 50);
        let vidvrd = load_builtin_taxonomy("vidvrd").unwrap();
        assert_eq!(vidvrd.supercategories.len(), 35);
        assert_eq!(vidvrd.predicate_kinds.len(), 132);
        assert!(matches!(
            load_builtin_taxonomy("imagenet"),
            Err(Error::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn builtin_taxonomy_spot_checks() {
        let vidor = load_builtin_taxonomy("vidor").unwrap();
        assert_eq!(vidor.supercategory_of("dog"), "animal");
        assert_eq!(vidor.supercategory_of("adult"), "person");
        assert_eq!(vidor.kind_of("towards"), Some(PredicateKind::Spatial));
        assert_eq!(vidor.kind_of("hug"), Some(PredicateKind::Action));
        // Unmapped entries fall back rather than fail.
        assert_eq!(vidor.supercategory_of("widget"), FALLBACK_SUPERCATEGORY);
        assert_eq!(vidor.kind_of("teleport"), None);

        let vidvrd = load_builtin_taxonomy("vidvrd").unwrap();
        assert_eq!(vidvrd.supercategory_of("zebra"), "animal");
        assert_eq!(vidvrd.kind_of("walk_front"), Some(PredicateKind::Action));
        assert_eq!(vidvrd.kind_of("beneath"), Some(PredicateKind::Spatial));
    }

    #[test]
    fn explicit_vocabulary_is_respected_and_extended() {
        let dir = TempDir::new().unwrap();
        write_json(dir.path(), "a.json", &sample_gt_json("v_a"));
        let with_vocab = GtLoadOptions {
            predicate_vocab: Some(BTreeSet::from([
                "chase".to_string(),
                "watch".to_string(),
            ])),
            ..opts()
        };
        let loaded = load_ground_truth(dir.path(), &with_vocab).unwrap();
        assert_eq!(loaded.dataset.predicate_vocab.len(), 2);
        // Observed labels outside the explicit vocabulary still enter it.
        let narrow = GtLoadOptions {
            predicate_vocab: Some(BTreeSet::from(["watch".to_string()])),
            ..opts()
        };
        let loaded = load_ground_truth(dir.path(), &narrow).unwrap();
        assert!(loaded.dataset.predicate_vocab.contains("chase"));
    }
}
