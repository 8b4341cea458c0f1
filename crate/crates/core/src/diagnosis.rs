//! Classification of false positives into error types, plus the bookkeeping
//! of which ground truths went undetected.
//!
//! Every kept prediction that failed to match is assigned exactly one error
//! type by walking a precedence list of predicates over two signals: the best
//! overlap against same-triplet ground truth and the best overlap against
//! different-triplet ground truth. The predicates jointly cover every
//! unmatched prediction, so classification is total under *any* precedence
//! order (the order only arbitrates predictions satisfying several
//! predicates at once).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data_model::{Dataset, Prediction, PredictionSet, VideoAnnotation};
use crate::evaluation::{match_video, EvalConfig, MatchOutcome};
use crate::{Error, Result};

/// The six diagnosable failure modes. The first five apply to false-positive
/// predictions; [`ErrorType::MissedGroundTruth`] names ground truth that no
/// prediction claimed and exists so cures can address recall as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorType {
    /// Localizes a ground-truth pair well but names the wrong triplet.
    Classification,
    /// Names the right triplet but localizes poorly (overlap in the
    /// background..threshold band).
    Localization,
    /// Wrong triplet *and* poor localization of some other ground truth.
    Confusion,
    /// Would be a valid match, but a higher-scoring prediction already
    /// claimed the ground truth.
    DoubleDetection,
    /// Overlaps nothing: both overlap signals fall below the background
    /// threshold.
    Background,
    /// A ground-truth instance no kept prediction matched.
    MissedGroundTruth,
}

impl ErrorType {
    /// The five error types a false-positive prediction can receive.
    pub const FP_TYPES: [ErrorType; 5] = [
        ErrorType::Classification,
        ErrorType::Localization,
        ErrorType::Confusion,
        ErrorType::DoubleDetection,
        ErrorType::Background,
    ];

    /// All six failure modes, in canonical reporting order.
    pub const ALL: [ErrorType; 6] = [
        ErrorType::Classification,
        ErrorType::Localization,
        ErrorType::Confusion,
        ErrorType::DoubleDetection,
        ErrorType::Background,
        ErrorType::MissedGroundTruth,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorType::Classification => "classification",
            ErrorType::Localization => "localization",
            ErrorType::Confusion => "confusion",
            ErrorType::DoubleDetection => "double_detection",
            ErrorType::Background => "background",
            ErrorType::MissedGroundTruth => "missed_ground_truth",
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" => Ok(ErrorType::Classification),
            "localization" => Ok(ErrorType::Localization),
            "confusion" => Ok(ErrorType::Confusion),
            "double_detection" => Ok(ErrorType::DoubleDetection),
            "background" => Ok(ErrorType::Background),
            "missed_ground_truth" => Ok(ErrorType::MissedGroundTruth),
            other => Err(Error::Config(format!(
                "unknown error type '{other}' (expected one of: classification, \
                 localization, confusion, double_detection, background, \
                 missed_ground_truth)"
            ))),
        }
    }
}

/// Default precedence: duplicates are recognized before the wrong-label
/// cases, and well-localized mistakes before poorly localized ones.
pub const DEFAULT_PRECEDENCE: [ErrorType; 5] = [
    ErrorType::DoubleDetection,
    ErrorType::Classification,
    ErrorType::Localization,
    ErrorType::Confusion,
    ErrorType::Background,
];

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisConfig {
    pub eval: EvalConfig,
    /// Order in which the five false-positive predicates are tried. Must be
    /// a permutation of [`ErrorType::FP_TYPES`].
    pub precedence: Vec<ErrorType>,
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        DiagnosisConfig {
            eval: EvalConfig::default(),
            precedence: DEFAULT_PRECEDENCE.to_vec(),
        }
    }
}

impl DiagnosisConfig {
    pub fn validate(&self) -> Result<()> {
        self.eval.validate()?;
        let mut seen: Vec<ErrorType> = self.precedence.clone();
        seen.sort();
        seen.dedup();
        let mut expected = ErrorType::FP_TYPES.to_vec();
        expected.sort();
        if seen != expected || self.precedence.len() != 5 {
            return Err(Error::Config(format!(
                "precedence must list each of the five false-positive error \
                 types exactly once, got [{}]",
                self.precedence
                    .iter()
                    .map(|t| t.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        Ok(())
    }
}

/// Assign an error type to one unmatched prediction.
///
/// `gt_matched` must hold the *final* per-ground-truth matched flags of the
/// greedy pass. Guaranteed to return for any precedence permutation: the
/// five predicates jointly cover the plane of (same-triplet, different-
/// triplet) overlap values once greedy matching has run, because an
/// unmatched prediction whose same-triplet overlap reaches the threshold can
/// only exist if that ground truth was claimed by someone else.
pub fn classify_fp(
    rec: &crate::evaluation::MatchRecord,
    gt_matched: &[bool],
    cfg: &DiagnosisConfig,
) -> ErrorType {
    debug_assert!(!rec.is_matched(), "only false positives are classified");
    let t = cfg.eval.viou_threshold;
    let bg = cfg.eval.background_threshold;
    let same = rec.best_same_overlap();
    let diff = rec.best_diff_overlap();
    let same_target_matched = rec.best_same.is_some_and(|b| gt_matched[b.gt_index]);

    for ty in &cfg.precedence {
        let hit = match ty {
            ErrorType::DoubleDetection => same >= t && same_target_matched,
            ErrorType::Classification => diff >= t,
            ErrorType::Localization => bg <= same && same < t,
            ErrorType::Confusion => bg <= diff && diff < t,
            ErrorType::Background => same < bg && diff < bg,
            ErrorType::MissedGroundTruth => unreachable!("not a false-positive type"),
        };
        if hit {
            return *ty;
        }
    }
    unreachable!(
        "false positive escaped the taxonomy: same={same}, diff={diff}, \
         target_matched={same_target_matched}"
    )
}

/// Matching plus per-prediction verdicts for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoDiagnosis {
    pub video_id: String,
    pub outcome: MatchOutcome,
    /// Parallel to `outcome.records`; `None` marks true positives.
    pub verdicts: Vec<Option<ErrorType>>,
    /// Indices of ground-truth instances no prediction matched.
    pub missed_gts: Vec<usize>,
}

impl VideoDiagnosis {
    pub fn fp_counts(&self) -> BTreeMap<ErrorType, usize> {
        let mut counts = BTreeMap::new();
        for v in self.verdicts.iter().flatten() {
            *counts.entry(*v).or_insert(0) += 1;
        }
        counts
    }
}

/// Match one video and classify every false positive.
pub fn diagnose_video(
    preds: &[Prediction],
    ann: &VideoAnnotation,
    cfg: &DiagnosisConfig,
) -> VideoDiagnosis {
    let outcome = match_video(preds, &ann.ground_truth, &cfg.eval);
    let verdicts = outcome
        .records
        .iter()
        .map(|rec| (!rec.is_matched()).then(|| classify_fp(rec, &outcome.gt_matched, cfg)))
        .collect();
    let missed_gts = outcome
        .gt_matched
        .iter()
        .enumerate()
        .filter_map(|(gi, m)| (!m).then_some(gi))
        .collect();
    VideoDiagnosis {
        video_id: ann.video_id.clone(),
        outcome,
        verdicts,
        missed_gts,
    }
}

/// Diagnosis of every video in a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetDiagnosis {
    pub videos: BTreeMap<String, VideoDiagnosis>,
}

impl DatasetDiagnosis {
    /// False-positive counts per error type, plus the missed-ground-truth
    /// tally under [`ErrorType::MissedGroundTruth`]. Types that never occur
    /// are present with count zero.
    pub fn error_counts(&self) -> BTreeMap<ErrorType, usize> {
        let mut counts: BTreeMap<ErrorType, usize> =
            ErrorType::ALL.iter().map(|t| (*t, 0)).collect();
        for vd in self.videos.values() {
            for v in vd.verdicts.iter().flatten() {
                *counts.get_mut(v).expect("all types pre-seeded") += 1;
            }
            *counts
                .get_mut(&ErrorType::MissedGroundTruth)
                .expect("all types pre-seeded") += vd.missed_gts.len();
        }
        counts
    }

    pub fn n_true_positives(&self) -> usize {
        self.videos.values().map(|v| v.outcome.n_matched()).sum()
    }

    pub fn n_false_positives(&self) -> usize {
        self.videos
            .values()
            .map(|v| v.verdicts.iter().flatten().count())
            .sum()
    }

    pub fn n_ground_truth(&self) -> usize {
        self.videos.values().map(|v| v.outcome.n_gt()).sum()
    }
}

/// Diagnose every video of the dataset.
pub fn diagnose_dataset(
    dataset: &Dataset,
    preds: &PredictionSet,
    cfg: &DiagnosisConfig,
) -> Result<DatasetDiagnosis> {
    cfg.validate()?;
    let videos = dataset
        .videos
        .par_iter()
        .map(|(vid, ann)| (vid.clone(), diagnose_video(preds.for_video(vid), ann, cfg)))
        .collect();
    Ok(DatasetDiagnosis { videos })
}
