//! Greedy matching of predictions against ground truth and the AP / mAP
//! scoring built on top of it.
//!
//! Matching is the standard detection protocol: predictions are visited in
//! descending score order (ties keep input order), each may claim at most one
//! still-unclaimed ground-truth instance carrying the *same* triplet, and the
//! claim succeeds only when the pair overlap reaches the vIoU threshold.
//! Everything downstream — AP, the error taxonomy, the cures — consumes the
//! per-prediction records produced here.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::data_model::{Dataset, Prediction, PredictionSet, RelationInstance};
use crate::overlap::pair_overlap;
use crate::{Error, Result};

/// Knobs shared by evaluation and diagnosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Minimum pair overlap for a prediction to match a ground truth.
    pub viou_threshold: f64,
    /// Only the `top_k` highest-scoring predictions per video are scored.
    pub top_k: usize,
    /// Below this overlap a false positive counts as pure background.
    pub background_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            viou_threshold: 0.5,
            top_k: 200,
            background_threshold: 0.1,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.viou_threshold.is_finite() && (0.0..=1.0).contains(&self.viou_threshold)) {
            return Err(Error::Config(format!(
                "viou threshold must lie in [0, 1], got {}",
                self.viou_threshold
            )));
        }
        if !(self.background_threshold.is_finite()
            && (0.0..=1.0).contains(&self.background_threshold))
        {
            return Err(Error::Config(format!(
                "background threshold must lie in [0, 1], got {}",
                self.background_threshold
            )));
        }
        if self.background_threshold > self.viou_threshold {
            return Err(Error::Config(format!(
                "background threshold {} exceeds viou threshold {}",
                self.background_threshold, self.viou_threshold
            )));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top-k must be at least 1".into()));
        }
        Ok(())
    }
}

/// The strongest overlap a prediction achieved against some ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestOverlap {
    /// Index into the video's ground-truth list.
    pub gt_index: usize,
    pub overlap: f64,
}

/// Matching outcome for one kept prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    /// Index into the *input* prediction slice (pre-sort order).
    pub input_index: usize,
    pub score: f64,
    /// Ground truth claimed by this prediction, if any.
    pub matched_gt: Option<usize>,
    /// Best overlap against any ground truth with the same triplet,
    /// matched or not.
    pub best_same: Option<BestOverlap>,
    /// Best overlap against any ground truth with a different triplet.
    pub best_diff: Option<BestOverlap>,
}

impl MatchRecord {
    pub fn is_matched(&self) -> bool {
        self.matched_gt.is_some()
    }

    pub fn best_same_overlap(&self) -> f64 {
        self.best_same.map_or(0.0, |b| b.overlap)
    }

    pub fn best_diff_overlap(&self) -> f64 {
        self.best_diff.map_or(0.0, |b| b.overlap)
    }
}

/// Everything matching learned about one video.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    /// Kept predictions in descending score order (the scoring order).
    pub records: Vec<MatchRecord>,
    /// Final matched flag per ground-truth instance.
    pub gt_matched: Vec<bool>,
    /// Number of predictions discarded by the top-k cut.
    pub truncated: usize,
}

impl MatchOutcome {
    pub fn n_gt(&self) -> usize {
        self.gt_matched.len()
    }

    pub fn n_matched(&self) -> usize {
        self.records.iter().filter(|r| r.is_matched()).count()
    }

    pub fn n_missed(&self) -> usize {
        self.gt_matched.iter().filter(|m| !**m).count()
    }
}

/// Indices of `preds` in scoring order: descending score, ties keeping input
/// order, truncated to `top_k`.
pub fn scoring_order(preds: &[Prediction], top_k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    // Stable sort: equal scores keep their input order.
    order.sort_by(|&a, &b| {
        preds[b]
            .score
            .partial_cmp(&preds[a].score)
            .expect("prediction scores must not be NaN")
    });
    order.truncate(top_k);
    order
}

/// Match one video's predictions against its ground truth.
pub fn match_video(
    preds: &[Prediction],
    gts: &[RelationInstance],
    cfg: &EvalConfig,
) -> MatchOutcome {
    let order = scoring_order(preds, cfg.top_k);
    let truncated = preds.len() - order.len();
    let mut gt_matched = vec![false; gts.len()];
    let mut records = Vec::with_capacity(order.len());

    for &pi in &order {
        let pred = &preds[pi];
        let mut best_same: Option<BestOverlap> = None;
        let mut best_diff: Option<BestOverlap> = None;
        let mut claim: Option<BestOverlap> = None;

        for (gi, gt) in gts.iter().enumerate() {
            let ov = pair_overlap(
                &pred.subject_traj,
                &pred.object_traj,
                &gt.subject_traj,
                &gt.object_traj,
            );
            let slot = if pred.triplet == gt.triplet {
                &mut best_same
            } else {
                &mut best_diff
            };
            // Strict `>` keeps the lowest index on ties.
            if slot.is_none_or(|b| ov > b.overlap) {
                *slot = Some(BestOverlap {
                    gt_index: gi,
                    overlap: ov,
                });
            }
            if pred.triplet == gt.triplet
                && !gt_matched[gi]
                && ov >= cfg.viou_threshold
                && claim.is_none_or(|b| ov > b.overlap)
            {
                claim = Some(BestOverlap {
                    gt_index: gi,
                    overlap: ov,
                });
            }
        }

        if let Some(c) = claim {
            gt_matched[c.gt_index] = true;
        }
        records.push(MatchRecord {
            input_index: pi,
            score: pred.score,
            matched_gt: claim.map(|c| c.gt_index),
            best_same,
            best_diff,
        });
    }

    MatchOutcome {
        records,
        gt_matched,
        truncated,
    }
}

/// Non-interpolated average precision over one video's match records.
///
/// Returns `None` when the video carries no ground truth — such videos are
/// excluded from the dataset mean rather than scored.
pub fn average_precision(records: &[MatchRecord], n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut matched_so_far = 0usize;
    let mut sum = 0.0;
    for (rank0, rec) in records.iter().enumerate() {
        if rec.is_matched() {
            matched_so_far += 1;
            sum += matched_so_far as f64 / (rank0 + 1) as f64;
        }
    }
    Some(sum / n_gt as f64)
}

/// Per-video scores plus the dataset mean.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    /// `None` marks videos without ground truth (excluded from the mean).
    pub per_video_ap: BTreeMap<String, Option<f64>>,
    /// Matched predictions per video; keeps aggregate counts exact when a
    /// masked re-evaluation copies untouched videos from a baseline.
    pub per_video_matched: BTreeMap<String, usize>,
    pub mean_ap: f64,
    /// Videos that carried ground truth and therefore entered the mean.
    pub n_scorable: usize,
    pub n_predictions_kept: usize,
    pub n_matched: usize,
    pub n_gt: usize,
}

impl EvalResult {
    fn empty() -> Self {
        EvalResult {
            per_video_ap: BTreeMap::new(),
            per_video_matched: BTreeMap::new(),
            mean_ap: 0.0,
            n_scorable: 0,
            n_predictions_kept: 0,
            n_matched: 0,
            n_gt: 0,
        }
    }
}

/// Match and score every video in the dataset.
///
/// Videos present in the ground truth but absent from the predictions score
/// zero; predictions for unknown videos are rejected earlier, at ingestion.
pub fn evaluate_dataset(
    dataset: &Dataset,
    preds: &PredictionSet,
    cfg: &EvalConfig,
) -> Result<EvalResult> {
    cfg.validate()?;
    let per_video: BTreeMap<String, (Option<f64>, usize, usize, usize)> = dataset
        .videos
        .par_iter()
        .map(|(vid, ann)| {
            let outcome = match_video(preds.for_video(vid), &ann.ground_truth, cfg);
            let ap = average_precision(&outcome.records, outcome.n_gt());
            (
                vid.clone(),
                (ap, outcome.records.len(), outcome.n_matched(), outcome.n_gt()),
            )
        })
        .collect();

    let mut result = EvalResult::empty();
    let mut ap_sum = 0.0;
    for (vid, (ap, kept, matched, n_gt)) in per_video {
        if let Some(a) = ap {
            ap_sum += a;
            result.n_scorable += 1;
        }
        result.n_predictions_kept += kept;
        result.n_matched += matched;
        result.n_gt += n_gt;
        result.per_video_matched.insert(vid.clone(), matched);
        result.per_video_ap.insert(vid, ap);
    }
    if result.n_scorable == 0 {
        return Err(Error::NoScorableVideo);
    }
    result.mean_ap = ap_sum / result.n_scorable as f64;
    Ok(result)
}

/// Re-evaluate with some ground truths removed: `removed[video]` holds the
/// ground-truth indices to drop before matching. Videos without removals are
/// copied from `baseline` rather than recomputed, so sweeping many small
/// masks stays cheap. A video whose ground truth empties out becomes
/// unscorable, exactly as if it had been annotated that way.
pub fn evaluate_masked(
    dataset: &Dataset,
    preds: &PredictionSet,
    removed: &BTreeMap<String, BTreeSet<usize>>,
    cfg: &EvalConfig,
    baseline: &EvalResult,
) -> Result<EvalResult> {
    cfg.validate()?;
    let affected: Vec<(&String, &BTreeSet<usize>)> = removed
        .iter()
        .filter(|(vid, idx)| !idx.is_empty() && dataset.videos.contains_key(*vid))
        .collect();
    let recomputed: BTreeMap<String, (Option<f64>, usize, usize, usize)> = affected
        .par_iter()
        .map(|(vid, idx)| {
            let ann = &dataset.videos[*vid];
            let kept_gts: Vec<RelationInstance> = ann
                .ground_truth
                .iter()
                .enumerate()
                .filter(|(gi, _)| !idx.contains(gi))
                .map(|(_, g)| g.clone())
                .collect();
            let outcome = match_video(preds.for_video(vid), &kept_gts, cfg);
            let ap = average_precision(&outcome.records, outcome.n_gt());
            (
                (*vid).clone(),
                (ap, outcome.records.len(), outcome.n_matched(), outcome.n_gt()),
            )
        })
        .collect();

    let mut result = EvalResult::empty();
    let mut ap_sum = 0.0;
    for (vid, base_ap) in &baseline.per_video_ap {
        let (ap, kept, matched, n_gt) = match recomputed.get(vid) {
            Some(r) => r.clone(),
            None => {
                // Unaffected: ground truth unchanged, so the baseline AP and
                // match count carry over.
                let ann = &dataset.videos[vid];
                let kept = preds.for_video(vid).len().min(cfg.top_k);
                let matched = baseline.per_video_matched.get(vid).copied().unwrap_or(0);
                (*base_ap, kept, matched, ann.ground_truth.len())
            }
        };
        if let Some(a) = ap {
            ap_sum += a;
            result.n_scorable += 1;
        }
        result.n_predictions_kept += kept;
        result.n_matched += matched;
        result.n_gt += n_gt;
        result.per_video_matched.insert(vid.clone(), matched);
        result.per_video_ap.insert(vid.clone(), ap);
    }
    if result.n_scorable == 0 {
        return Err(Error::NoScorableVideo);
    }
    result.mean_ap = ap_sum / result.n_scorable as f64;
    Ok(result)
}
