// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reference segmenters: zero-velocity crossings (ZVC), sum of squared
//! velocities with windowed minima (SSAV), and sliding-window PCA
//! reconstruction error.
//!
//! All of them return canonical points in frames within `[0, f_max]`.

pub mod pca;
pub mod ssav;
pub mod zvc;

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Recording, SegmentationResult};

pub use pca::{pca_segment, reconstruction_errors, PcaParams};
pub use ssav::{ssav_segment, squared_velocity_sum, SsavParams};
pub use zvc::{zvc_segment, ZvcParams};

/// Per-channel velocities in units per second: central differences inside,
/// one-sided differences at the two ends. Indexed `[frame][channel]`.
pub fn velocities(rec: &Recording) -> Vec<Vec<f64>> {
    let frames = rec.frames();
    let n = frames.len();
    let rate = rec.frame_rate_hz();
    (0..n)
        .map(|t| {
            let (lo, hi) = (t.saturating_sub(1), (t + 1).min(n - 1));
            let span = (hi - lo) as f64;
            frames[hi]
                .iter()
                .zip(&frames[lo])
                .map(|(b, a)| if span > 0.0 { (b - a) / span * rate } else { 0.0 })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Zvc,
    Ssav,
    Pca,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Zvc => "zvc",
            Algorithm::Ssav => "ssav",
            Algorithm::Pca => "pca",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zvc" => Ok(Algorithm::Zvc),
            "ssav" => Ok(Algorithm::Ssav),
            "pca" => Ok(Algorithm::Pca),
            other => Err(Error::Config(format!(
                "unknown algorithm {other:?} (expected zvc, ssav or pca)"
            ))),
        }
    }
}

/// Parameters of any baseline, tagged by algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "lowercase")]
pub enum BaselineParams {
    Zvc(ZvcParams),
    Ssav(SsavParams),
    Pca(PcaParams),
}

impl BaselineParams {
    pub fn defaults(algo: Algorithm) -> Self {
        match algo {
            Algorithm::Zvc => BaselineParams::Zvc(ZvcParams::default()),
            Algorithm::Ssav => BaselineParams::Ssav(SsavParams::default()),
            Algorithm::Pca => BaselineParams::Pca(PcaParams::default()),
        }
    }

    /// Defaults of `algo` overridden by the keys present in `overrides`.
    pub fn with_overrides(algo: Algorithm, overrides: &serde_json::Value) -> Result<Self> {
        let mut value = serde_json::to_value(Self::defaults(algo))?;
        if let (Some(base), Some(extra)) = (value.as_object_mut(), overrides.as_object()) {
            for (k, v) in extra {
                if k != "algo" {
                    base.insert(k.clone(), v.clone());
                }
            }
        }
        let params: BaselineParams = serde_json::from_value(value)?;
        params.validate()?;
        Ok(params)
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            BaselineParams::Zvc(_) => Algorithm::Zvc,
            BaselineParams::Ssav(_) => Algorithm::Ssav,
            BaselineParams::Pca(_) => Algorithm::Pca,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaselineParams::Zvc(p) => p.validate(),
            BaselineParams::Ssav(p) => p.validate(),
            BaselineParams::Pca(p) => p.validate(),
        }
    }

    /// Flat parameter map for report provenance.
    pub fn to_map(&self) -> BTreeMap<String, serde_json::Value> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(m)) => m
                .into_iter()
                .filter(|(k, _)| k != "algo")
                .collect(),
            _ => BTreeMap::new(),
        }
    }

    pub fn segment(&self, rec: &Recording) -> Result<SegmentationResult> {
        match self {
            BaselineParams::Zvc(p) => zvc_segment(rec, p),
            BaselineParams::Ssav(p) => ssav_segment(rec, p),
            BaselineParams::Pca(p) => pca_segment(rec, p),
        }
    }
}
