//! Diagnosis toolkit for video relation detection.
//!
//! A relation detector emits scored ⟨subject, predicate, object⟩ triplets
//! localized by a pair of box trajectories (tubelets). This crate matches
//! such predictions against ground truth with the standard voluminal-IoU
//! protocol, computes per-video AP and dataset mAP, and then goes past the
//! single scalar: every unmatched prediction is assigned one of five false
//! positive types, missed ground truth is profiled by relation
//! characteristics, each error type gets an oracle cure with its isolated
//! mAP gain, and training-set predicate bias is quantified with a naive
//! Bayes probe.
//!
//! The `vrd-diagnose` binary wires these pieces into `evaluate`, `diagnose`,
//! `bias`, `fixtures`, and `validate` subcommands that read VidOR-style
//! annotation and prediction files and write JSON/CSV reports (plus optional
//! SVG charts).

pub mod bias_stats;
pub mod characteristics;
pub mod charts;
pub mod cures;
pub mod data_model;
pub mod diagnosis;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod ingestion;
pub mod overlap;
pub mod report;

pub use error::Error;

/// Result alias used across the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Toolkit version stamped into every structured report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
