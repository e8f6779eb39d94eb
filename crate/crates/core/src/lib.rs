// SPDX-License-Identifier: MIT OR Apache-2.0

//! Evaluation of temporal segmentation algorithms against hierarchically
//! labelled ground truth.
//!
//! Segmentation points are compared under three matching approaches
//! (conventional exact-frame matching, tolerance margins and integrated
//! kernels), summarised by six ratio measures plus the penalised squared
//! minimum error, and evaluated once per ground-truth granularity.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod measures;
pub mod model;
pub mod pipeline;
pub mod synthgen;

pub use classifiers::{
    classify_conventional, classify_ink, classify_margin, sample_error_function, ConfusionCounts,
    ErrorSample, Kernel, KernelConfig, MarginConfig,
};
pub use error::{Error, Result};
pub use measures::{compute_measures, compute_psme, CountingSource, MeasureSet, Psme, PsmeConfig};
pub use model::{
    canonicalize_points, frames_to_ms, time_ms_to_frames, GroundTruth, Granularity, LabelledPoint,
    Recording, SegmentationResult,
};

/// Version string embedded in every report.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
