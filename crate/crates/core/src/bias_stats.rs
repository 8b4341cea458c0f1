//! How predictable are predicates from their endpoints alone?
//!
//! A dataset is biased to the extent that ⟨subject, object⟩ already gives
//! away the predicate. The probe here is a counting classifier fit on a
//! training split: factored naïve Bayes P(p)·P(s|p)·P(o|p) with Laplace
//! smoothing by default, with a raw joint-table mode behind a flag for
//! sensitivity checks. Alongside it, a super-category co-occurrence matrix
//! summarizes which kinds of things relate to which, split by predicate
//! kind (action vs. spatial), for external charting.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::data_model::Dataset;
use crate::ingestion::{PredicateKind, Taxonomy};
use crate::{Error, Result};

/// Which estimator [`BiasModel::predict`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    /// P(p)·P(s|p)·P(o|p) from smoothed factored tables.
    Factored,
    /// Argmax of the raw joint count table count(s, p, o); falls back to
    /// the prior when the pair was never seen with any predicate.
    Joint,
}

impl BiasMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BiasMode::Factored => "factored",
            BiasMode::Joint => "joint",
        }
    }
}

impl std::str::FromStr for BiasMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "factored" => Ok(BiasMode::Factored),
            "joint" => Ok(BiasMode::Joint),
            other => Err(Error::Config(format!(
                "unknown bias mode '{other}' (expected 'factored' or 'joint')"
            ))),
        }
    }
}

/// Count tables fit on a training split.
///
/// Vocabularies come from the training dataset's declared vocabularies (not
/// merely the observed labels), in their natural sorted order — which is
/// also the deterministic tie-break order for predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasModel {
    predicate_vocab: Vec<String>,
    object_vocab: Vec<String>,
    predicate_index: BTreeMap<String, usize>,
    object_index: BTreeMap<String, usize>,
    /// Relation instances per predicate; sums to `n_train`.
    predicate_counts: Vec<u64>,
    /// `subject_counts[p][s]`: instances with predicate p and subject s.
    subject_counts: Vec<Vec<u64>>,
    object_counts: Vec<Vec<u64>>,
    /// Raw joint table for the sensitivity mode, keyed (s, p, o).
    joint_counts: BTreeMap<(usize, usize, usize), u64>,
    alpha: f64,
    n_train: u64,
}

/// Fit count tables over every training relation instance with Laplace
/// smoothing constant `alpha` (1 by default; 0 disables smoothing).
pub fn fit_bias_model(train: &Dataset, alpha: f64) -> Result<BiasModel> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Config(format!(
            "smoothing constant must be finite and non-negative, got {alpha}"
        )));
    }
    if train.videos.values().all(|a| a.ground_truth.is_empty()) {
        return Err(Error::EmptyDataset(
            "bias model needs a training split with relation instances".into(),
        ));
    }
    let predicate_vocab: Vec<String> = train.predicate_vocab.iter().cloned().collect();
    let object_vocab: Vec<String> = train.object_vocab.iter().cloned().collect();
    if predicate_vocab.is_empty() || object_vocab.is_empty() {
        return Err(Error::EmptyDataset(
            "bias model needs non-empty vocabularies".into(),
        ));
    }
    let predicate_index: BTreeMap<String, usize> = predicate_vocab
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), i))
        .collect();
    let object_index: BTreeMap<String, usize> = object_vocab
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), i))
        .collect();

    let mut model = BiasModel {
        predicate_counts: vec![0; predicate_vocab.len()],
        subject_counts: vec![vec![0; object_vocab.len()]; predicate_vocab.len()],
        object_counts: vec![vec![0; object_vocab.len()]; predicate_vocab.len()],
        joint_counts: BTreeMap::new(),
        alpha,
        n_train: 0,
        predicate_vocab,
        object_vocab,
        predicate_index,
        object_index,
    };

    for rel in train.instances() {
        let p = *model.predicate_index.get(&rel.triplet.predicate).ok_or_else(|| {
            Error::Config(format!(
                "training predicate '{}' missing from the declared vocabulary",
                rel.triplet.predicate
            ))
        })?;
        let s = *model.object_index.get(&rel.triplet.subject).ok_or_else(|| {
            Error::Config(format!(
                "training subject '{}' missing from the declared vocabulary",
                rel.triplet.subject
            ))
        })?;
        let o = *model.object_index.get(&rel.triplet.object).ok_or_else(|| {
            Error::Config(format!(
                "training object '{}' missing from the declared vocabulary",
                rel.triplet.object
            ))
        })?;
        model.predicate_counts[p] += 1;
        model.subject_counts[p][s] += 1;
        model.object_counts[p][o] += 1;
        *model.joint_counts.entry((s, p, o)).or_default() += 1;
        model.n_train += 1;
    }
    Ok(model)
}

impl BiasModel {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_train(&self) -> u64 {
        self.n_train
    }

    pub fn predicate_vocab(&self) -> &[String] {
        &self.predicate_vocab
    }

    /// Chance accuracy of guessing predicates uniformly.
    pub fn random_baseline(&self) -> f64 {
        1.0 / self.predicate_vocab.len() as f64
    }

    /// The most likely predicate for a ⟨subject, object⟩ pair. Ties go to
    /// the earliest predicate in vocabulary order. Subject or object labels
    /// the model has no column for contribute a uniform likelihood, which
    /// cannot move an argmax, so their factor is simply skipped.
    pub fn predict(&self, subject: &str, object: &str, mode: BiasMode) -> &str {
        let s = self.object_index.get(subject).copied();
        let o = self.object_index.get(object).copied();
        let best = match mode {
            BiasMode::Factored => self.predict_factored(s, o),
            BiasMode::Joint => self.predict_joint(s, o),
        };
        &self.predicate_vocab[best]
    }

    fn predict_factored(&self, s: Option<usize>, o: Option<usize>) -> usize {
        let vocab_size = self.object_vocab.len() as f64;
        let n_preds = self.predicate_vocab.len() as f64;
        let mut best: Option<(usize, f64)> = None;
        for (p, &c_p) in self.predicate_counts.iter().enumerate() {
            let c_p_f = c_p as f64;
            // With alpha = 0 a never-seen predicate has zero prior; writing
            // that as -inf directly avoids the 0/0 its conditionals would
            // produce.
            let score = if c_p == 0 && self.alpha == 0.0 {
                f64::NEG_INFINITY
            } else {
                let mut score = ((c_p_f + self.alpha)
                    / (self.n_train as f64 + self.alpha * n_preds))
                    .ln();
                if let Some(s) = s {
                    score += ((self.subject_counts[p][s] as f64 + self.alpha)
                        / (c_p_f + self.alpha * vocab_size))
                        .ln();
                }
                if let Some(o) = o {
                    score += ((self.object_counts[p][o] as f64 + self.alpha)
                        / (c_p_f + self.alpha * vocab_size))
                        .ln();
                }
                score
            };
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((p, score));
            }
        }
        let (argmax, score) = best.expect("vocabulary is non-empty");
        if score == f64::NEG_INFINITY {
            // Unsmoothed model, pair unseen under every predicate: fall
            // back to the prior.
            self.prior_argmax()
        } else {
            argmax
        }
    }

    fn predict_joint(&self, s: Option<usize>, o: Option<usize>) -> usize {
        let (Some(s), Some(o)) = (s, o) else {
            return self.prior_argmax();
        };
        let mut best: Option<(usize, u64)> = None;
        for p in 0..self.predicate_vocab.len() {
            let c = self.joint_counts.get(&(s, p, o)).copied().unwrap_or(0);
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((p, c));
            }
        }
        match best {
            Some((p, c)) if c > 0 => p,
            // Smoothing adds the same alpha to every cell, so an unseen
            // pair is a full tie either way; the prior is the only signal
            // left.
            _ => self.prior_argmax(),
        }
    }

    fn prior_argmax(&self) -> usize {
        let mut best = 0usize;
        for (p, &c) in self.predicate_counts.iter().enumerate() {
            if c > self.predicate_counts[best] {
                best = p;
            }
        }
        best
    }

    /// The ratio-preserving rescaling: every raw count *and* the smoothing
    /// constant multiplied by `k`, as if each training instance had been
    /// observed `k` times under `k` times the smoothing. Every smoothed
    /// probability — and therefore every prediction — is unchanged.
    pub fn scaled(&self, k: u64) -> BiasModel {
        assert!(k >= 1, "scale factor must be positive");
        let mut scaled = self.clone();
        scaled.alpha *= k as f64;
        scaled.n_train *= k;
        for c in &mut scaled.predicate_counts {
            *c *= k;
        }
        for table in [&mut scaled.subject_counts, &mut scaled.object_counts] {
            for row in table.iter_mut() {
                for c in row.iter_mut() {
                    *c *= k;
                }
            }
        }
        for c in scaled.joint_counts.values_mut() {
            *c *= k;
        }
        scaled
    }

    /// Largest deviation of any per-predicate conditional distribution from
    /// summing to one. Zero up to rounding when the tables are consistent.
    pub fn max_conditional_sum_error(&self) -> f64 {
        let vocab_size = self.object_vocab.len() as f64;
        let mut worst = 0.0f64;
        for (p, &c_p) in self.predicate_counts.iter().enumerate() {
            let denom = c_p as f64 + self.alpha * vocab_size;
            if denom == 0.0 {
                continue;
            }
            for table in [&self.subject_counts, &self.object_counts] {
                let sum: f64 = table[p]
                    .iter()
                    .map(|&c| (c as f64 + self.alpha) / denom)
                    .sum();
                worst = worst.max((sum - 1.0).abs());
            }
        }
        worst
    }
}

/// Predicate predictability of an evaluation split.
#[derive(Debug, Clone, Serialize)]
pub struct BiasAccuracy {
    pub mode: String,
    pub accuracy: f64,
    pub random_baseline: f64,
    pub n_eval: u64,
    pub n_correct: u64,
}

/// Score the classifier on every relation instance of `eval`.
pub fn bias_accuracy(model: &BiasModel, eval: &Dataset, mode: BiasMode) -> Result<BiasAccuracy> {
    let instances: Vec<_> = eval.instances().collect();
    if instances.is_empty() {
        return Err(Error::EmptyDataset(
            "bias accuracy needs an evaluation split with relation instances".into(),
        ));
    }
    let n_correct = instances
        .par_iter()
        .filter(|rel| {
            model.predict(&rel.triplet.subject, &rel.triplet.object, mode)
                == rel.triplet.predicate
        })
        .count() as u64;
    let n_eval = instances.len() as u64;
    Ok(BiasAccuracy {
        mode: mode.as_str().to_string(),
        accuracy: n_correct as f64 / n_eval as f64,
        random_baseline: model.random_baseline(),
        n_eval,
        n_correct,
    })
}

/// Per-cell instance counts split by predicate kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub action: u64,
    pub spatial: u64,
    /// Predicates the taxonomy does not classify; kept so the matrix total
    /// still conserves the instance count.
    pub unknown: u64,
}

impl KindCounts {
    pub fn total(&self) -> u64 {
        self.action + self.spatial + self.unknown
    }

    fn of(&self, kind: Option<PredicateKind>) -> u64 {
        match kind {
            Some(PredicateKind::Action) => self.action,
            Some(PredicateKind::Spatial) => self.spatial,
            None => self.unknown,
        }
    }
}

/// Super-category × super-category co-occurrence grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    /// Sorted union of the groups appearing on either side.
    pub groups: Vec<String>,
    /// Keyed (subject group, object group); absent cells are zero.
    pub cells: BTreeMap<(String, String), KindCounts>,
    pub total: u64,
}

impl CooccurrenceMatrix {
    pub fn count(&self, subject_group: &str, object_group: &str, kind: Option<PredicateKind>) -> u64 {
        self.cells
            .get(&(subject_group.to_string(), object_group.to_string()))
            .map_or(0, |c| c.of(kind))
    }

    /// Swap the roles of every cell (the matrix of the role-swapped corpus).
    pub fn transposed(&self) -> CooccurrenceMatrix {
        CooccurrenceMatrix {
            groups: self.groups.clone(),
            cells: self
                .cells
                .iter()
                .map(|((s, o), c)| ((o.clone(), s.clone()), *c))
                .collect(),
            total: self.total,
        }
    }
}

/// Tally every training relation instance into a super-category grid.
/// Returns the matrix plus warnings for predicates of unknown kind.
pub fn cooccurrence(train: &Dataset, tax: &Taxonomy) -> (CooccurrenceMatrix, Vec<String>) {
    let mut cells: BTreeMap<(String, String), KindCounts> = BTreeMap::new();
    let mut groups: std::collections::BTreeSet<String> = Default::default();
    let mut unknown_predicates: std::collections::BTreeSet<String> = Default::default();
    let mut total = 0u64;
    for rel in train.instances() {
        let sg = tax.supercategory_of(&rel.triplet.subject).to_string();
        let og = tax.supercategory_of(&rel.triplet.object).to_string();
        groups.insert(sg.clone());
        groups.insert(og.clone());
        let cell = cells.entry((sg, og)).or_default();
        match tax.kind_of(&rel.triplet.predicate) {
            Some(PredicateKind::Action) => cell.action += 1,
            Some(PredicateKind::Spatial) => cell.spatial += 1,
            None => {
                cell.unknown += 1;
                unknown_predicates.insert(rel.triplet.predicate.clone());
            }
        }
        total += 1;
    }
    let warnings = unknown_predicates
        .into_iter()
        .map(|p| format!("predicate '{p}' has no action/spatial kind in the taxonomy"))
        .collect();
    (
        CooccurrenceMatrix {
            groups: groups.into_iter().collect(),
            cells,
            total,
        },
        warnings,
    )
}

/// Write one predicate kind's grid as CSV: header row of object groups,
/// one row per subject group.
pub fn write_cooccurrence_csv(
    matrix: &CooccurrenceMatrix,
    kind: Option<PredicateKind>,
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["subject_group".to_string()];
    header.extend(matrix.groups.iter().cloned());
    w.write_record(&header).map_err(|e| Error::parse(path, e.to_string()))?;
    for sg in &matrix.groups {
        let mut row = vec![sg.clone()];
        for og in &matrix.groups {
            row.push(matrix.count(sg, og, kind).to_string());
        }
        w.write_record(&row).map_err(|e| Error::parse(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
