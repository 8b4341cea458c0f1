//! Deterministic synthetic datasets and error-injected predictions.
//!
//! The generator lays every relation instance out on a 1920×1080 canvas in
//! its own *cell*: one of three horizontal lanes (y bands of 340 px) crossed
//! with a 350-frame time slot. Subjects live in the left part of a lane,
//! objects in the right, and the strip below the lanes (y ≥ 1020) stays
//! empty for background injections. Cells never overlap in space-time, so
//! the overlap between any prediction derived from one cell and any ground
//! truth in another cell is exactly zero — which is what makes injected
//! errors land in their intended category *by construction* rather than by
//! luck. Every injection is still verified against the real overlap numbers
//! before it is accepted.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data_model::{
    BoundingBox, Dataset, Prediction, PredictionSet, RelationInstance, Trajectory, Triplet,
    VideoAnnotation,
};
use crate::diagnosis::ErrorType;
use crate::overlap::viou;
use crate::{Error, Result};

const CANVAS_W: u32 = 1920;
const CANVAS_H: u32 = 1080;
const LANE_H: i64 = 340;
const N_LANES: usize = 3;
const SLOT_FRAMES: i64 = 350;
/// Subject boxes start in [0, 900), object boxes in [960, 1860).
const SUBJECT_X: (f64, f64) = (0.0, 900.0);
const OBJECT_X: (f64, f64) = (960.0, 1860.0);
/// Box side lengths chosen to populate every pixel-area bin.
const BOX_SIDES: [f64; 5] = [10.0, 25.0, 60.0, 150.0, 300.0];

/// Shape of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetParams {
    pub n_videos: usize,
    pub relations_per_video: usize,
    /// Number of synthetic object categories (`obj_000`, …).
    pub n_object_categories: usize,
    /// Number of synthetic predicates (`pred_000`, …).
    pub n_predicates: usize,
    pub fps: f64,
    /// Inclusive range of trajectory lengths in frames. The maximum must
    /// stay below the 350-frame slot.
    pub frame_len_range: (i64, i64),
    pub seed: u64,
}

impl Default for DatasetParams {
    fn default() -> Self {
        DatasetParams {
            n_videos: 4,
            relations_per_video: 6,
            n_object_categories: 8,
            n_predicates: 6,
            fps: 10.0,
            // 2 s – 32 s at 10 fps: populates all three length bins.
            frame_len_range: (20, 320),
            seed: 7,
        }
    }
}

impl DatasetParams {
    fn validate(&self) -> Result<()> {
        if self.n_videos == 0 || self.n_object_categories == 0 || self.n_predicates == 0 {
            return Err(Error::Config(
                "fixture sizes must all be positive".into(),
            ));
        }
        let (lo, hi) = self.frame_len_range;
        if lo < 1 || hi < lo || hi >= SLOT_FRAMES {
            return Err(Error::Config(format!(
                "frame length range [{lo}, {hi}] must satisfy 1 <= lo <= hi < {SLOT_FRAMES}"
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("fps must be positive, got {}", self.fps)));
        }
        Ok(())
    }
}

fn object_label(i: usize) -> String {
    format!("obj_{i:03}")
}

fn predicate_label(i: usize) -> String {
    format!("pred_{i:03}")
}

fn video_rng(seed: u64, video_index: usize, stream: u64) -> ChaCha8Rng {
    // Distinct, well-separated streams per (video, purpose).
    let mixed = seed
        ^ (video_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Cell geometry of relation instance `i` within its video.
fn cell(i: usize) -> (i64, i64) {
    let lane_y = (i % N_LANES) as i64 * LANE_H;
    let slot_begin = (i / N_LANES) as i64 * SLOT_FRAMES;
    (lane_y, slot_begin)
}

fn const_traj(begin: i64, len: i64, b: BoundingBox) -> Trajectory {
    Trajectory::new(begin, vec![b; len as usize])
}

/// Generate a well-formed synthetic dataset. The same parameters always
/// produce the same dataset, bit for bit.
pub fn generate_dataset(params: &DatasetParams) -> Result<Dataset> {
    params.validate()?;
    let n_slots = params.relations_per_video.div_ceil(N_LANES).max(1) as i64;
    let frame_count = n_slots * SLOT_FRAMES;

    let videos: BTreeMap<String, VideoAnnotation> = (0..params.n_videos)
        .into_par_iter()
        .map(|vi| {
            let video_id = format!("video_{vi:04}");
            let mut rng = video_rng(params.seed, vi, 0);
            let mut objects = BTreeMap::new();
            let mut ground_truth = Vec::with_capacity(params.relations_per_video);
            for i in 0..params.relations_per_video {
                let (lane_y, slot_begin) = cell(i);
                let len = rng.gen_range(params.frame_len_range.0..=params.frame_len_range.1);
                let begin = slot_begin + rng.gen_range(0..SLOT_FRAMES - len);

                let mut place = |x_range: (f64, f64)| {
                    let side = BOX_SIDES[rng.gen_range(0..BOX_SIDES.len())];
                    let x = rng.gen_range(x_range.0..x_range.1 - side);
                    let y = lane_y as f64 + rng.gen_range(0.0..(LANE_H as f64 - side));
                    BoundingBox::new(x, y, x + side, y + side)
                };
                let subject_box = place(SUBJECT_X);
                let object_box = place(OBJECT_X);

                let subject = object_label(rng.gen_range(0..params.n_object_categories));
                let object = object_label(rng.gen_range(0..params.n_object_categories));
                let predicate = predicate_label(rng.gen_range(0..params.n_predicates));

                let (subject_tid, object_tid) = (2 * i as i64, 2 * i as i64 + 1);
                objects.insert(subject_tid, subject.clone());
                objects.insert(object_tid, object.clone());
                ground_truth.push(RelationInstance {
                    triplet: Triplet::new(subject, predicate, object),
                    subject_traj: const_traj(begin, len, subject_box),
                    object_traj: const_traj(begin, len, object_box),
                    video_id: video_id.clone(),
                    subject_tid,
                    object_tid,
                    begin_fid: begin,
                    end_fid: begin + len,
                });
            }
            let ann = VideoAnnotation {
                video_id: video_id.clone(),
                fps: params.fps,
                frame_count,
                width: CANVAS_W,
                height: CANVAS_H,
                objects,
                ground_truth,
            };
            (video_id, ann)
        })
        .collect();

    Ok(Dataset {
        name: "custom".into(),
        split: "synthetic".into(),
        videos,
        object_vocab: (0..params.n_object_categories).map(object_label).collect(),
        predicate_vocab: (0..params.n_predicates).map(predicate_label).collect(),
    })
}

/// Per-video counts of errors to inject, plus perturbation knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSpec {
    pub classification: usize,
    pub localization: usize,
    pub confusion: usize,
    pub double_detection: usize,
    pub background: usize,
    /// Ground truths (per video) for which no true positive is emitted.
    pub missed_ground_truths: usize,
    /// Target overlap band for under-localized injections; must sit strictly
    /// inside (background, viou) thresholds so rounding noise cannot cross a
    /// category boundary.
    pub localization_band: (f64, f64),
    /// Fraction of under-localized injections realized as temporal shifts
    /// instead of spatial ones (subject to feasibility; falls back to
    /// spatial).
    pub temporal_shift_fraction: f64,
    pub seed: u64,
}

impl Default for InjectionSpec {
    fn default() -> Self {
        InjectionSpec {
            classification: 0,
            localization: 0,
            confusion: 0,
            double_detection: 0,
            background: 0,
            missed_ground_truths: 0,
            localization_band: (0.15, 0.45),
            temporal_shift_fraction: 0.5,
            seed: 11,
        }
    }
}

/// What each generated prediction was engineered to be: `None` marks a true
/// positive, `Some(t)` an injected error of type `t`. The same shape as the
/// verdict list produced by diagnosis, so round-trip tests are a direct
/// comparison.
pub type Intent = Option<ErrorType>;

/// Predictions plus the per-prediction intents, parallel to each video's
/// prediction list (in input order).
#[derive(Debug, Clone, PartialEq)]
pub struct InjectedPredictions {
    pub predictions: PredictionSet,
    pub intents: BTreeMap<String, Vec<Intent>>,
}

impl InjectedPredictions {
    /// Intents as plain strings, for writing alongside fixture files.
    pub fn intent_labels(&self) -> BTreeMap<String, Vec<&'static str>> {
        self.intents
            .iter()
            .map(|(vid, list)| {
                let labels = list
                    .iter()
                    .map(|i| i.map_or("true_positive", |t| t.as_str()))
                    .collect();
                (vid.clone(), labels)
            })
            .collect()
    }
}

/// Generate a prediction set carrying exactly the errors requested by
/// `spec`, for every video of `dataset`.
pub fn perturb(dataset: &Dataset, spec: &InjectionSpec) -> Result<InjectedPredictions> {
    check_feasible(dataset, spec)?;
    let videos: Vec<(String, Vec<Prediction>, Vec<Intent>)> = dataset
        .videos
        .values()
        .collect::<Vec<_>>()
        .par_iter()
        .enumerate()
        .map(|(vi, ann)| {
            perturb_video(ann, dataset, spec, vi)
                .map(|(preds, intents)| (ann.video_id.clone(), preds, intents))
        })
        .collect::<Result<_>>()?;

    let mut out = InjectedPredictions {
        predictions: PredictionSet::default(),
        intents: BTreeMap::new(),
    };
    for (vid, preds, intents) in videos {
        out.predictions.videos.insert(vid.clone(), preds);
        out.intents.insert(vid, intents);
    }
    Ok(out)
}

fn check_feasible(dataset: &Dataset, spec: &InjectionSpec) -> Result<()> {
    let (lo, hi) = spec.localization_band;
    if !(0.1 < lo && lo <= hi && hi < 0.5) {
        return Err(Error::Config(format!(
            "localization band [{lo}, {hi}] must sit strictly inside (0.1, 0.5)"
        )));
    }
    if !(0.0..=1.0).contains(&spec.temporal_shift_fraction) {
        return Err(Error::Config(
            "temporal shift fraction must lie in [0, 1]".into(),
        ));
    }
    let needs_host = spec.classification + spec.localization + spec.confusion;
    let needs_flip = spec.classification + spec.confusion;
    for ann in dataset.videos.values() {
        let n = ann.ground_truth.len();
        if spec.missed_ground_truths > n {
            return Err(Error::InfeasibleInjection(format!(
                "video '{}': cannot miss {} of {} ground truths",
                ann.video_id, spec.missed_ground_truths, n
            )));
        }
        if needs_host > 0 && n == 0 {
            return Err(Error::InfeasibleInjection(format!(
                "video '{}': label/box perturbations need at least one ground truth",
                ann.video_id
            )));
        }
        let tps = n - spec.missed_ground_truths;
        if spec.double_detection > tps {
            return Err(Error::InfeasibleInjection(format!(
                "video '{}': {} double detections need as many true positives, \
                 only {tps} available",
                ann.video_id, spec.double_detection
            )));
        }
    }
    if needs_flip > 0 {
        let can_flip = dataset.object_vocab.len() >= 2 || dataset.predicate_vocab.len() >= 2;
        if !can_flip {
            return Err(Error::InfeasibleInjection(
                "label flips need at least two labels in some vocabulary".into(),
            ));
        }
    }
    Ok(())
}

/// Score layout: the true positive of cell `i` scores `1000 − 3i`;
/// mislabeled/shifted injections hosted on cell `i` score just above it,
/// duplicates just below it, and background injections above everything.
/// Sixteenth steps keep every score exactly representable, so files
/// round-trip bit-for-bit.
fn tp_score(cell: usize) -> f64 {
    1000.0 - 3.0 * cell as f64
}

fn perturb_video(
    ann: &VideoAnnotation,
    dataset: &Dataset,
    spec: &InjectionSpec,
    video_index: usize,
) -> Result<(Vec<Prediction>, Vec<Intent>)> {
    let mut rng = video_rng(spec.seed, video_index, 1);
    let n_gt = ann.ground_truth.len();

    // Which ground truths stay undetected.
    let mut missed: BTreeSet<usize> = BTreeSet::new();
    while missed.len() < spec.missed_ground_truths {
        missed.insert(rng.gen_range(0..n_gt));
    }

    let mut preds = Vec::new();
    let mut intents = Vec::new();

    // True positives first: exact copies of the ground truth.
    for (gi, gt) in ann.ground_truth.iter().enumerate() {
        if missed.contains(&gi) {
            continue;
        }
        preds.push(Prediction {
            triplet: gt.triplet.clone(),
            score: tp_score(gi),
            subject_traj: gt.subject_traj.clone(),
            object_traj: gt.object_traj.clone(),
        });
        intents.push(None);
    }

    // Per-host counters for the score ladders above and below each TP.
    let mut above = vec![0u32; n_gt];
    let mut below = vec![0u32; n_gt];
    let score_above = |host: usize, above: &mut Vec<u32>| {
        let k = above[host];
        above[host] += 1;
        tp_score(host) + 1.0 - k as f64 / 16.0
    };

    let any_host = |rng: &mut ChaCha8Rng| rng.gen_range(0..n_gt);
    let matched_hosts: Vec<usize> = (0..n_gt).filter(|gi| !missed.contains(gi)).collect();

    for _ in 0..spec.classification {
        let host = any_host(&mut rng);
        let gt = &ann.ground_truth[host];
        let triplet = flip_triplet(&gt.triplet, dataset, &mut rng);
        let pred = Prediction {
            triplet,
            score: score_above(host, &mut above),
            subject_traj: gt.subject_traj.clone(),
            object_traj: gt.object_traj.clone(),
        };
        push_verified(ann, pred, ErrorType::Classification, spec, &mut preds, &mut intents)?;
    }

    for _ in 0..spec.localization {
        let host = any_host(&mut rng);
        let gt = &ann.ground_truth[host];
        let (subject_traj, object_traj) = under_localize(gt, spec, &mut rng);
        let pred = Prediction {
            triplet: gt.triplet.clone(),
            score: score_above(host, &mut above),
            subject_traj,
            object_traj,
        };
        push_verified(ann, pred, ErrorType::Localization, spec, &mut preds, &mut intents)?;
    }

    for _ in 0..spec.confusion {
        let host = any_host(&mut rng);
        let gt = &ann.ground_truth[host];
        let (subject_traj, object_traj) = under_localize(gt, spec, &mut rng);
        let pred = Prediction {
            triplet: flip_triplet(&gt.triplet, dataset, &mut rng),
            score: score_above(host, &mut above),
            subject_traj,
            object_traj,
        };
        push_verified(ann, pred, ErrorType::Confusion, spec, &mut preds, &mut intents)?;
    }

    for _ in 0..spec.double_detection {
        let host = matched_hosts[rng.gen_range(0..matched_hosts.len())];
        let gt = &ann.ground_truth[host];
        let k = below[host];
        below[host] += 1;
        let pred = Prediction {
            triplet: gt.triplet.clone(),
            score: tp_score(host) - 1.0 - k as f64 / 16.0,
            subject_traj: gt.subject_traj.clone(),
            object_traj: gt.object_traj.clone(),
        };
        push_verified(ann, pred, ErrorType::DoubleDetection, spec, &mut preds, &mut intents)?;
    }

    for k in 0..spec.background {
        // The strip below the lanes is never touched by ground truth.
        let x = 40.0 + (k as f64 * 37.0) % 1500.0;
        let y = 1030.0;
        let begin = (k as i64 * 13) % (ann.frame_count.max(20) - 10);
        let subject_traj = const_traj(begin, 10, BoundingBox::new(x, y, x + 20.0, y + 20.0));
        let object_traj = const_traj(
            begin,
            10,
            BoundingBox::new(x + 40.0, y, x + 60.0, y + 20.0),
        );
        let triplet = random_triplet(dataset, &mut rng);
        let pred = Prediction {
            triplet,
            score: 1001.0 + k as f64 / 16.0,
            subject_traj,
            object_traj,
        };
        push_verified(ann, pred, ErrorType::Background, spec, &mut preds, &mut intents)?;
    }

    Ok((preds, intents))
}

fn random_triplet(dataset: &Dataset, rng: &mut ChaCha8Rng) -> Triplet {
    let pick = |vocab: &BTreeSet<String>, rng: &mut ChaCha8Rng| {
        vocab
            .iter()
            .nth(rng.gen_range(0..vocab.len()))
            .expect("non-empty vocabulary")
            .clone()
    };
    Triplet::new(
        pick(&dataset.object_vocab, rng),
        pick(&dataset.predicate_vocab, rng),
        pick(&dataset.object_vocab, rng),
    )
}

/// Change exactly one slot of the triplet to a different in-vocabulary
/// label, preferring the predicate slot.
fn flip_triplet(t: &Triplet, dataset: &Dataset, rng: &mut ChaCha8Rng) -> Triplet {
    let next_label = |vocab: &BTreeSet<String>, current: &str, rng: &mut ChaCha8Rng| {
        let options: Vec<&String> = vocab.iter().filter(|l| l.as_str() != current).collect();
        (!options.is_empty()).then(|| options[rng.gen_range(0..options.len())].clone())
    };
    let mut flipped = t.clone();
    if let Some(p) = next_label(&dataset.predicate_vocab, &t.predicate, rng) {
        flipped.predicate = p;
    } else if let Some(o) = next_label(&dataset.object_vocab, &t.object, rng) {
        flipped.object = o;
    } else if let Some(s) = next_label(&dataset.object_vocab, &t.subject, rng) {
        flipped.subject = s;
    }
    debug_assert_ne!(&flipped, t, "feasibility check guarantees a flip");
    flipped
}

/// Degrade both trajectories of `gt` so the pair overlap lands inside the
/// localization band — exactly, for spatial shifts; verified, for temporal
/// ones.
fn under_localize(
    gt: &RelationInstance,
    spec: &InjectionSpec,
    rng: &mut ChaCha8Rng,
) -> (Trajectory, Trajectory) {
    let (lo, hi) = spec.localization_band;
    let target = rng.gen_range(lo..=hi);
    if rng.gen_bool(spec.temporal_shift_fraction) {
        if let Some(pair) = temporal_shift(gt, target, lo, hi) {
            return pair;
        }
    }
    spatial_shift(gt, target)
}

/// Shift every box in +x (subject) / −x (object) so the per-frame IoU — and
/// therefore the vIoU, frames being identical — equals `r` exactly:
/// d = w·(1−r)/(1+r).
fn spatial_shift(gt: &RelationInstance, r: f64) -> (Trajectory, Trajectory) {
    let shift = |traj: &Trajectory, sign: f64| {
        let boxes = traj
            .boxes()
            .iter()
            .map(|b| {
                let d = sign * (b.xmax - b.xmin) * (1.0 - r) / (1.0 + r);
                BoundingBox::new(b.xmin + d, b.ymin, b.xmax + d, b.ymax)
            })
            .collect();
        Trajectory::new(traj.begin_fid(), boxes)
    };
    (shift(&gt.subject_traj, 1.0), shift(&gt.object_traj, -1.0))
}

/// Delay both trajectories by δ frames so the vIoU becomes (L−δ)/(L+δ).
/// Picks the δ whose overlap is closest to `target` while staying inside
/// [lo, hi]; `None` when no δ qualifies.
fn temporal_shift(
    gt: &RelationInstance,
    target: f64,
    lo: f64,
    hi: f64,
) -> Option<(Trajectory, Trajectory)> {
    let len = gt.subject_traj.len() as i64;
    let delta = (1..len)
        .filter(|d| {
            let ov = (len - d) as f64 / (len + d) as f64;
            (lo..=hi).contains(&ov)
        })
        .min_by(|a, b| {
            let ov = |d: &i64| (len - d) as f64 / (len + d) as f64;
            (ov(a) - target)
                .abs()
                .partial_cmp(&(ov(b) - target).abs())
                .expect("finite overlaps")
        })?;
    let delay = |traj: &Trajectory| Trajectory::new(traj.begin_fid() + delta, traj.boxes().to_vec());
    Some((delay(&gt.subject_traj), delay(&gt.object_traj)))
}

/// Accept the candidate only after checking, against every ground truth of
/// the video, that its overlap profile guarantees the intended verdict.
fn push_verified(
    ann: &VideoAnnotation,
    pred: Prediction,
    intent: ErrorType,
    spec: &InjectionSpec,
    preds: &mut Vec<Prediction>,
    intents: &mut Vec<Intent>,
) -> Result<()> {
    let mut best_same = 0.0f64;
    let mut best_diff = 0.0f64;
    for gt in &ann.ground_truth {
        let ov = viou(&pred.subject_traj, &gt.subject_traj)
            .min(viou(&pred.object_traj, &gt.object_traj));
        if gt.triplet == pred.triplet {
            best_same = best_same.max(ov);
        } else {
            best_diff = best_diff.max(ov);
        }
    }
    let (lo, hi) = spec.localization_band;
    let ok = match intent {
        ErrorType::Classification => best_diff >= 0.999 && best_same < 0.1,
        ErrorType::Localization => (lo..=hi).contains(&best_same) && best_diff < 0.1,
        ErrorType::Confusion => (lo..=hi).contains(&best_diff) && best_same < 0.1,
        ErrorType::DoubleDetection => best_same >= 0.999 && best_diff < 0.1,
        ErrorType::Background => best_same < 0.1 && best_diff < 0.1,
        ErrorType::MissedGroundTruth => false,
    };
    if !ok {
        return Err(Error::InfeasibleInjection(format!(
            "video '{}': {} injection landed at same={best_same:.4}, diff={best_diff:.4}",
            ann.video_id,
            intent.as_str()
        )));
    }
    preds.push(pred);
    intents.push(Some(intent));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::validate;
    use crate::diagnosis::{diagnose_video, DiagnosisConfig};

    #[test]
    fn generation_is_deterministic() {
        let params = DatasetParams::default();
        assert_eq!(generate_dataset(&params).unwrap(), generate_dataset(&params).unwrap());
        let reseeded = DatasetParams {
            seed: 8,
            ..params.clone()
        };
        assert_ne!(generate_dataset(&params).unwrap(), generate_dataset(&reseeded).unwrap());
    }

    #[test]
    fn generated_datasets_pass_validation() {
        let dataset = generate_dataset(&DatasetParams::default()).unwrap();
        for ann in dataset.videos.values() {
            let findings = validate(ann);
            assert!(findings.is_empty(), "unexpected findings: {findings:?}");
        }
    }

    #[test]
    fn generated_lengths_cover_all_three_length_bins() {
        let params = DatasetParams {
            n_videos: 6,
            relations_per_video: 12,
            ..DatasetParams::default()
        };
        let dataset = generate_dataset(&params).unwrap();
        let mut bins = [0usize; 3];
        for (rel, ann) in dataset
            .videos
            .values()
            .flat_map(|a| a.ground_truth.iter().map(move |r| (r, a)))
        {
            let sec = (rel.end_fid - rel.begin_fid) as f64 / ann.fps;
            let b = if sec <= 10.0 {
                0
            } else if sec <= 20.0 {
                1
            } else {
                2
            };
            bins[b] += 1;
        }
        assert!(bins.iter().all(|&c| c > 0), "length bins: {bins:?}");
    }

    #[test]
    fn instances_never_overlap_across_cells() {
        let dataset = generate_dataset(&DatasetParams {
            n_videos: 2,
            relations_per_video: 9,
            ..DatasetParams::default()
        })
        .unwrap();
        for ann in dataset.videos.values() {
            for (i, a) in ann.ground_truth.iter().enumerate() {
                for b in ann.ground_truth.iter().skip(i + 1) {
                    assert_eq!(viou(&a.subject_traj, &b.subject_traj), 0.0);
                    assert_eq!(viou(&a.object_traj, &b.object_traj), 0.0);
                    assert_eq!(viou(&a.subject_traj, &b.object_traj), 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_spec_reproduces_ground_truth_exactly() {
        let dataset = generate_dataset(&DatasetParams::default()).unwrap();
        let injected = perturb(&dataset, &InjectionSpec::default()).unwrap();
        for (vid, ann) in &dataset.videos {
            let preds = injected.predictions.for_video(vid);
            assert_eq!(preds.len(), ann.ground_truth.len());
            for (p, g) in preds.iter().zip(&ann.ground_truth) {
                assert_eq!(p.triplet, g.triplet);
                assert_eq!(p.subject_traj, g.subject_traj);
                assert_eq!(p.object_traj, g.object_traj);
            }
            assert!(injected.intents[vid].iter().all(Option::is_none));
        }
    }

    fn full_spec() -> InjectionSpec {
        InjectionSpec {
            classification: 3,
            localization: 4,
            confusion: 2,
            double_detection: 2,
            background: 5,
            missed_ground_truths: 1,
            ..InjectionSpec::default()
        }
    }

    #[test]
    fn injected_intents_match_diagnosed_verdicts() {
        let dataset = generate_dataset(&DatasetParams::default()).unwrap();
        let injected = perturb(&dataset, &full_spec()).unwrap();
        let cfg = DiagnosisConfig::default();
        for (vid, ann) in &dataset.videos {
            let preds = injected.predictions.for_video(vid);
            let d = diagnose_video(preds, ann, &cfg);
            let mut verdict_by_input = vec![None; preds.len()];
            for (rec, verdict) in d.outcome.records.iter().zip(&d.verdicts) {
                verdict_by_input[rec.input_index] = *verdict;
            }
            assert_eq!(verdict_by_input, injected.intents[vid]);
            assert_eq!(d.missed_gts.len(), 1);
        }
    }

    #[test]
    fn perturbation_is_deterministic() {
        let dataset = generate_dataset(&DatasetParams::default()).unwrap();
        let a = perturb(&dataset, &full_spec()).unwrap();
        let b = perturb(&dataset, &full_spec()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let dataset = generate_dataset(&DatasetParams {
            relations_per_video: 2,
            ..DatasetParams::default()
        })
        .unwrap();
        // More duplicates than true positives.
        let spec = InjectionSpec {
            double_detection: 3,
            ..InjectionSpec::default()
        };
        assert!(matches!(
            perturb(&dataset, &spec),
            Err(Error::InfeasibleInjection(_))
        ));
        // Cannot miss more ground truths than exist.
        let spec = InjectionSpec {
            missed_ground_truths: 3,
            ..InjectionSpec::default()
        };
        assert!(matches!(
            perturb(&dataset, &spec),
            Err(Error::InfeasibleInjection(_))
        ));
        // Band outside the safe region.
        let spec = InjectionSpec {
            localization_band: (0.05, 0.45),
            ..InjectionSpec::default()
        };
        assert!(matches!(perturb(&dataset, &spec), Err(Error::Config(_))));
    }

    #[test]
    fn fixtures_round_trip_through_the_file_formats() {
        use crate::ingestion;
        let dir = tempfile::TempDir::new().unwrap();
        let dataset = generate_dataset(&DatasetParams::default()).unwrap();
        let injected = perturb(&dataset, &full_spec()).unwrap();

        let gt_dir = dir.path().join("gt");
        ingestion::write_ground_truth_dir(&dataset, &gt_dir).unwrap();
        let opts = ingestion::GtLoadOptions {
            dataset_name: "custom".into(),
            split: "synthetic".into(),
            object_vocab: Some(dataset.object_vocab.clone()),
            predicate_vocab: Some(dataset.predicate_vocab.clone()),
            ..Default::default()
        };
        let reloaded = ingestion::load_ground_truth(&gt_dir, &opts).unwrap();
        assert_eq!(dataset, reloaded.dataset);

        let pred_path = dir.path().join("preds.json");
        ingestion::write_predictions_file(&injected.predictions, &pred_path).unwrap();
        let reloaded_preds = ingestion::load_predictions(&pred_path, &dataset).unwrap();
        assert_eq!(injected.predictions, reloaded_preds.predictions);
        assert_eq!(reloaded_preds.out_of_vocab, 0);
    }
}
