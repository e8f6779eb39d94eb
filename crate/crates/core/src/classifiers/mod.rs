// SPDX-License-Identifier: MIT OR Apache-2.0

//! Confusion counts from ground-truth and algorithm segmentation points.
//!
//! Three approaches are provided:
//!
//! * [`classify_conventional`] counts a true positive only on exact
//!   coincidence.
//! * [`classify_margin`] accepts algorithm points within a fixed temporal
//!   margin of a ground-truth point.
//! * [`classify_ink`] places a unit-mass kernel on every point (positive for
//!   the algorithm, negative for the ground truth) and integrates the
//!   positive and negative parts of the sum into real-valued counts.
//!
//! Every classifier canonicalizes both point lists first and closes the
//! matrix with `tn = f_max - tp - fp - fn`.

mod ink;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{canonicalize_points, check_range};

pub use ink::{classify_ink, sample_error_function, ErrorSample};

/// Real-valued confusion matrix of one recording.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    #[serde(rename = "tp")]
    pub true_positives: f64,
    #[serde(rename = "tn")]
    pub true_negatives: f64,
    #[serde(rename = "fp")]
    pub false_positives: f64,
    #[serde(rename = "fn")]
    pub false_negatives: f64,
    pub f_max: u64,
}

impl ConfusionCounts {
    /// Builds counts with `tn` derived from `f_max`, clamped at zero.
    pub fn closed(tp: f64, fp: f64, fn_: f64, f_max: u64) -> Self {
        let tn = (f_max as f64 - tp - fp - fn_).max(0.0);
        ConfusionCounts {
            true_positives: tp,
            true_negatives: tn,
            false_positives: fp,
            false_negatives: fn_,
            f_max,
        }
    }

    pub fn total(&self) -> f64 {
        self.true_positives + self.true_negatives + self.false_positives + self.false_negatives
    }

    /// Element-wise sum; `f_max` adds up as well.
    pub fn pooled(&self, other: &ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            true_positives: self.true_positives + other.true_positives,
            true_negatives: self.true_negatives + other.true_negatives,
            false_positives: self.false_positives + other.false_positives,
            false_negatives: self.false_negatives + other.false_negatives,
            f_max: self.f_max + other.f_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginConfig {
    /// Margin in frames.
    pub margin: f64,
    /// Accept points at exactly `margin` distance. Strict mode requires `< margin`.
    #[serde(default = "default_inclusive")]
    pub inclusive: bool,
}

fn default_inclusive() -> bool {
    true
}

impl MarginConfig {
    pub fn new(margin: f64) -> Result<Self> {
        let cfg = MarginConfig {
            margin,
            inclusive: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn strict(mut self) -> Self {
        self.inclusive = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.margin.is_finite() && self.margin > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("margin must be positive, got {}", self.margin)))
        }
    }

    fn within(&self, distance: f64) -> bool {
        if self.inclusive {
            distance <= self.margin
        } else {
            distance < self.margin
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Gaussian,
    /// Degenerate kernel; reduces InK to exact matching.
    Dirac,
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Kernel::Gaussian),
            "dirac" => Ok(Kernel::Dirac),
            other => Err(Error::Config(format!("unknown kernel {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Standard deviation in frames.
    pub sigma: f64,
    pub kernel: Kernel,
    /// Trapezoid step in frames.
    pub quadrature_step: f64,
    /// Half-width of the integration interval around every point, in frames.
    pub support_radius: f64,
}

impl KernelConfig {
    /// Gaussian kernel with step `sigma / 100` and support `6 sigma`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let cfg = KernelConfig {
            sigma,
            kernel: Kernel::Gaussian,
            quadrature_step: sigma / 100.0,
            support_radius: 6.0 * sigma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dirac() -> Self {
        KernelConfig {
            sigma: 0.0,
            kernel: Kernel::Dirac,
            quadrature_step: 0.0,
            support_radius: 0.0,
        }
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        self.quadrature_step = step;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel == Kernel::Dirac {
            return Ok(());
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.quadrature_step > 0.0) {
            return Err(Error::Config("quadrature step must be positive".into()));
        }
        if self.quadrature_step >= self.sigma {
            return Err(Error::Config(format!(
                "quadrature step {} must be smaller than sigma {}",
                self.quadrature_step, self.sigma
            )));
        }
        if self.support_radius < 4.0 * self.sigma {
            return Err(Error::Config(format!(
                "support radius {} must be at least 4 sigma",
                self.support_radius
            )));
        }
        Ok(())
    }
}

fn prepare(gt: &[f64], alg: &[f64], f_max: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_range(gt, f_max, "ground-truth")?;
    check_range(alg, f_max, "algorithm")?;
    Ok((canonicalize_points(gt), canonicalize_points(alg)))
}

/// Exact-coincidence matching: any offset counts as both a false positive
/// and a false negative.
pub fn classify_conventional(gt: &[f64], alg: &[f64], f_max: u64) -> Result<ConfusionCounts> {
    let (gt, alg) = prepare(gt, alg, f_max)?;
    let (mut i, mut j, mut tp) = (0, 0, 0usize);
    while i < gt.len() && j < alg.len() {
        match gt[i].total_cmp(&alg[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                tp += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let fp = alg.len() - tp;
    let fn_ = gt.len() - tp;
    Ok(ConfusionCounts::closed(tp as f64, fp as f64, fn_ as f64, f_max))
}

/// Margin matching, evaluated per ground-truth point.
///
/// Each ground-truth point with at least one algorithm point inside its
/// margin yields one true positive and one false positive per additional
/// point inside; without any it yields a false negative. Algorithm points
/// outside every margin are false positives. An algorithm point inside the
/// margins of two ground-truth points is counted as a true positive twice.
pub fn classify_margin(
    gt: &[f64],
    alg: &[f64],
    f_max: u64,
    cfg: &MarginConfig,
) -> Result<ConfusionCounts> {
    cfg.validate()?;
    let (gt, alg) = prepare(gt, alg, f_max)?;

    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for &g in &gt {
        let matched = alg.iter().filter(|&&s| cfg.within((s - g).abs())).count();
        if matched == 0 {
            fn_ += 1;
        } else {
            tp += 1;
            fp += matched - 1;
        }
    }
    fp += alg
        .iter()
        .filter(|&&s| !gt.iter().any(|&g| cfg.within((s - g).abs())))
        .count();

    Ok(ConfusionCounts::closed(tp as f64, fp as f64, fn_ as f64, f_max))
}
