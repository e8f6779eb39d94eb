// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::velocities;
use crate::error::{Error, Result};
use crate::model::{Recording, SegmentationResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsavParams {
    /// Sliding window length in frames, centred on the candidate.
    pub window: usize,
    /// A window minimum must lie strictly below this value.
    pub threshold_t: f64,
    /// ... and strictly above this one.
    pub noise_threshold: f64,
}

impl Default for SsavParams {
    fn default() -> Self {
        SsavParams {
            window: 21,
            threshold_t: 1.0,
            noise_threshold: 1e-3,
        }
    }
}

impl SsavParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 {
            return Err(Error::Config("SSAV window must be at least 3 frames".into()));
        }
        if !(0.0 <= self.noise_threshold && self.noise_threshold < self.threshold_t) {
            return Err(Error::Config(
                "SSAV thresholds must satisfy 0 <= noise_threshold < threshold_t".into(),
            ));
        }
        Ok(())
    }
}

/// `s(t)`: sum over channels of squared velocity.
pub fn squared_velocity_sum(rec: &Recording) -> Vec<f64> {
    velocities(rec)
        .into_iter()
        .map(|row| row.iter().map(|v| v * v).sum())
        .collect()
}

/// Reports frames that are the minimum of their centred window with a value
/// between the noise threshold and `threshold_t`. A run of adjacent
/// reported frames (a flat minimum) yields its middle frame once.
pub fn ssav_segment(rec: &Recording, params: &SsavParams) -> Result<SegmentationResult> {
    params.validate()?;
    let n = rec.frames().len();
    if n < params.window {
        return Err(Error::Degenerate(format!(
            "SSAV window {} exceeds recording length {n}",
            params.window
        )));
    }
    let s = squared_velocity_sum(rec);
    let half = params.window / 2;

    let hits: Vec<usize> = (0..n)
        .filter(|&t| {
            let v = s[t];
            if !(v > params.noise_threshold && v < params.threshold_t) {
                return false;
            }
            let lo = t.saturating_sub(half);
            let hi = (t + half).min(n - 1);
            s[lo..=hi].iter().all(|&w| v <= w)
        })
        .collect();

    let mut points = Vec::new();
    let mut i = 0;
    while i < hits.len() {
        let mut j = i + 1;
        while j < hits.len() && hits[j] == hits[j - 1] + 1 {
            j += 1;
        }
        points.push(hits[i + (j - i - 1) / 2] as f64);
        i = j;
    }
    Ok(SegmentationResult::new(rec.name(), &points))
}
