//! What kinds of ground truth go undetected.
//!
//! Every ground-truth relation is described along six characteristics —
//! how long it lasts, how large its subject and object appear, and how
//! common its subject category, object category and predicate are — and
//! each characteristic is cut into a small set of bins. False negatives are
//! then histogrammed per bin, and for each bin we measure how much the mAP
//! would improve if the misses falling into that bin simply did not exist.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::data_model::{Dataset, PredictionSet, RelationInstance};
use crate::diagnosis::DatasetDiagnosis;
use crate::evaluation::{evaluate_masked, EvalConfig, EvalResult};
use crate::Result;

/// The six axes along which ground-truth relations are profiled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Characteristic {
    /// Relation length in seconds.
    Length,
    /// Mean subject box area in pixels.
    SubjectSize,
    /// Mean object box area in pixels.
    ObjectSize,
    /// How many instances of the subject's category the counting split has.
    SubjectFrequency,
    /// Same for the object's category.
    ObjectFrequency,
    /// How many relation instances carry this predicate.
    PredicateFrequency,
}

impl Characteristic {
    pub const ALL: [Characteristic; 6] = [
        Characteristic::Length,
        Characteristic::SubjectSize,
        Characteristic::ObjectSize,
        Characteristic::SubjectFrequency,
        Characteristic::ObjectFrequency,
        Characteristic::PredicateFrequency,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Characteristic::Length => "length",
            Characteristic::SubjectSize => "subject_size",
            Characteristic::ObjectSize => "object_size",
            Characteristic::SubjectFrequency => "subject_frequency",
            Characteristic::ObjectFrequency => "object_frequency",
            Characteristic::PredicateFrequency => "predicate_frequency",
        }
    }

    /// Bin labels in ascending order of the underlying quantity.
    pub fn bins(&self) -> &'static [&'static str] {
        match self {
            Characteristic::Length => LENGTH_BINS,
            Characteristic::SubjectSize | Characteristic::ObjectSize => SIZE_BINS,
            _ => FREQUENCY_BINS,
        }
    }
}

impl std::fmt::Display for Characteristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const LENGTH_BINS: &[&str] = &["s", "m", "l"];
pub const SIZE_BINS: &[&str] = &["xs", "s", "m", "l", "xl"];
pub const FREQUENCY_BINS: &[&str] = &["xs", "s", "m", "l", "xl", "xxl"];

/// Seconds → {s: (0,10], m: (10,20], l: (20,∞)}.
pub fn length_bin(seconds: f64) -> &'static str {
    if seconds <= 10.0 {
        "s"
    } else if seconds <= 20.0 {
        "m"
    } else {
        "l"
    }
}

/// Mean box area → bins bounded at 16², 32², 96² and 288² pixels.
pub fn size_bin(area: f64) -> &'static str {
    if area <= 256.0 {
        "xs"
    } else if area <= 1024.0 {
        "s"
    } else if area <= 9216.0 {
        "m"
    } else if area <= 82944.0 {
        "l"
    } else {
        "xl"
    }
}

/// Instance count → decade bins bounded at 10, 10², 10³, 10⁴ and 10⁵.
/// A zero count (category unseen by the counting split) falls into `xs`.
pub fn frequency_bin(count: u64) -> &'static str {
    if count <= 10 {
        "xs"
    } else if count <= 100 {
        "s"
    } else if count <= 1_000 {
        "m"
    } else if count <= 10_000 {
        "l"
    } else if count <= 100_000 {
        "xl"
    } else {
        "xxl"
    }
}

/// Category and predicate frequencies measured on some reference split.
///
/// Object categories are counted per annotated trajectory (each tid is one
/// object instance); predicates are counted per relation instance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstanceCounts {
    pub objects: BTreeMap<String, u64>,
    pub predicates: BTreeMap<String, u64>,
    /// Name of the split the counts were taken from, echoed into reports.
    pub source: String,
}

impl InstanceCounts {
    pub fn from_dataset(dataset: &Dataset, source: &str) -> InstanceCounts {
        let mut counts = InstanceCounts {
            source: source.to_string(),
            ..Default::default()
        };
        for ann in dataset.videos.values() {
            for category in ann.objects.values() {
                *counts.objects.entry(category.clone()).or_default() += 1;
            }
            for rel in &ann.ground_truth {
                *counts.predicates.entry(rel.triplet.predicate.clone()).or_default() += 1;
            }
        }
        counts
    }

    pub fn object_count(&self, category: &str) -> u64 {
        self.objects.get(category).copied().unwrap_or(0)
    }

    pub fn predicate_count(&self, predicate: &str) -> u64 {
        self.predicates.get(predicate).copied().unwrap_or(0)
    }
}

/// One relation's position along all six characteristics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicProfile {
    pub length_sec: f64,
    pub subject_area: f64,
    pub object_area: f64,
    pub subject_count: u64,
    pub object_count: u64,
    pub predicate_count: u64,
}

impl CharacteristicProfile {
    pub fn bin(&self, c: Characteristic) -> &'static str {
        match c {
            Characteristic::Length => length_bin(self.length_sec),
            Characteristic::SubjectSize => size_bin(self.subject_area),
            Characteristic::ObjectSize => size_bin(self.object_area),
            Characteristic::SubjectFrequency => frequency_bin(self.subject_count),
            Characteristic::ObjectFrequency => frequency_bin(self.object_count),
            Characteristic::PredicateFrequency => frequency_bin(self.predicate_count),
        }
    }
}

/// Profile one ground-truth relation. `fps` converts its frame span into
/// seconds; box areas are unweighted means over the trajectory.
pub fn characterize(
    rel: &RelationInstance,
    fps: f64,
    counts: &InstanceCounts,
) -> CharacteristicProfile {
    CharacteristicProfile {
        length_sec: (rel.end_fid - rel.begin_fid) as f64 / fps,
        subject_area: rel.subject_traj.mean_area(),
        object_area: rel.object_traj.mean_area(),
        subject_count: counts.object_count(&rel.triplet.subject),
        object_count: counts.object_count(&rel.triplet.object),
        predicate_count: counts.predicate_count(&rel.triplet.predicate),
    }
}

/// Ground-truth and miss tallies for one bin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BinStat {
    pub n_gt: u64,
    pub n_missed: u64,
}

impl BinStat {
    /// Fraction of the bin's ground truth that went undetected; `None` when
    /// the bin holds no ground truth at all (empty, not zero).
    pub fn miss_rate(&self) -> Option<f64> {
        (self.n_gt > 0).then(|| self.n_missed as f64 / self.n_gt as f64)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BinReport {
    pub bin: &'static str,
    pub n_gt: u64,
    pub n_missed: u64,
    /// `null` for bins without ground truth.
    pub miss_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicReport {
    pub characteristic: &'static str,
    pub bins: Vec<BinReport>,
}

/// False negatives histogrammed along every characteristic.
#[derive(Debug, Clone, Serialize)]
pub struct FnAnalysis {
    pub counts_source: String,
    pub n_gt: u64,
    pub n_missed: u64,
    pub characteristics: Vec<CharacteristicReport>,
    pub warnings: Vec<String>,
}

/// Histogram the missed ground truths of `diagnosis` along all six
/// characteristics. Every ground truth lands in exactly one bin per
/// characteristic, so each characteristic's bins sum to the same totals.
pub fn analyze_false_negatives(
    dataset: &Dataset,
    diagnosis: &DatasetDiagnosis,
    counts: &InstanceCounts,
) -> FnAnalysis {
    let mut stats: BTreeMap<Characteristic, BTreeMap<&'static str, BinStat>> = Characteristic::ALL
        .iter()
        .map(|c| (*c, c.bins().iter().map(|b| (*b, BinStat::default())).collect()))
        .collect();
    let mut unseen: BTreeSet<String> = BTreeSet::new();
    let mut n_gt = 0u64;
    let mut n_missed = 0u64;

    for (vid, ann) in &dataset.videos {
        let missed: BTreeSet<usize> = diagnosis
            .videos
            .get(vid)
            .map(|d| d.missed_gts.iter().copied().collect())
            .unwrap_or_default();
        for (gi, rel) in ann.ground_truth.iter().enumerate() {
            let profile = characterize(rel, ann.fps, counts);
            if counts.object_count(&rel.triplet.subject) == 0 {
                unseen.insert(rel.triplet.subject.clone());
            }
            if counts.object_count(&rel.triplet.object) == 0 {
                unseen.insert(rel.triplet.object.clone());
            }
            if counts.predicate_count(&rel.triplet.predicate) == 0 {
                unseen.insert(rel.triplet.predicate.clone());
            }
            let is_missed = missed.contains(&gi);
            n_gt += 1;
            n_missed += u64::from(is_missed);
            for c in Characteristic::ALL {
                let stat = stats
                    .get_mut(&c)
                    .and_then(|bins| bins.get_mut(profile.bin(c)))
                    .expect("bin labels are closed over their characteristic");
                stat.n_gt += 1;
                stat.n_missed += u64::from(is_missed);
            }
        }
    }

    let mut warnings: Vec<String> = unseen
        .into_iter()
        .map(|label| {
            format!(
                "'{label}' never occurs in the {} counts; its frequency bin \
                 defaults to 'xs'",
                counts.source
            )
        })
        .collect();
    warnings.sort();

    FnAnalysis {
        counts_source: counts.source.clone(),
        n_gt,
        n_missed,
        characteristics: Characteristic::ALL
            .iter()
            .map(|c| CharacteristicReport {
                characteristic: c.as_str(),
                bins: c
                    .bins()
                    .iter()
                    .map(|b| {
                        let s = stats[c][b];
                        BinReport {
                            bin: b,
                            n_gt: s.n_gt,
                            n_missed: s.n_missed,
                            miss_rate: s.miss_rate(),
                        }
                    })
                    .collect(),
            })
            .collect(),
        warnings,
    }
}

/// mAP improvement from making one bin's misses disappear.
#[derive(Debug, Clone, Serialize)]
pub struct MapGainRow {
    pub characteristic: &'static str,
    pub bin: &'static str,
    pub n_missed_removed: u64,
    pub map_after: f64,
    pub gain: f64,
}

/// For every (characteristic, bin), remove the missed ground truths falling
/// into that bin and re-score. Removing misses can only help, so every gain
/// is non-negative; removing the misses of *all* bins at once is exactly the
/// missed-ground-truth cure.
pub fn map_gain_by_characteristic(
    dataset: &Dataset,
    preds: &PredictionSet,
    diagnosis: &DatasetDiagnosis,
    counts: &InstanceCounts,
    cfg: &EvalConfig,
    baseline: &EvalResult,
) -> Result<Vec<MapGainRow>> {
    // Missed ground truths, profiled once.
    let mut missed_bins: Vec<(String, usize, CharacteristicProfile)> = Vec::new();
    for (vid, ann) in &dataset.videos {
        if let Some(d) = diagnosis.videos.get(vid) {
            for &gi in &d.missed_gts {
                let profile = characterize(&ann.ground_truth[gi], ann.fps, counts);
                missed_bins.push((vid.clone(), gi, profile));
            }
        }
    }

    let mut rows = Vec::new();
    for c in Characteristic::ALL {
        for bin in c.bins() {
            let mut removed: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
            let mut n_removed = 0u64;
            for (vid, gi, profile) in &missed_bins {
                if profile.bin(c) == *bin {
                    removed.entry(vid.clone()).or_default().insert(*gi);
                    n_removed += 1;
                }
            }
            let map_after = if n_removed == 0 {
                baseline.mean_ap
            } else {
                evaluate_masked(dataset, preds, &removed, cfg, baseline)?.mean_ap
            };
            rows.push(MapGainRow {
                characteristic: c.as_str(),
                bin,
                n_missed_removed: n_removed,
                map_after,
                gain: map_after - baseline.mean_ap,
            });
        }
    }
    Ok(rows)
}
