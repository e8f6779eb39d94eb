// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::velocities;
use crate::error::{Error, Result};
use crate::model::{Recording, SegmentationResult};

/// Crossings of different channels at most this many frames apart count as
/// simultaneous.
const COINCIDENCE_FRAMES: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZvcParams {
    /// Velocity magnitude (units/s) below which a sample carries no sign.
    pub noise_floor: f64,
    pub min_crossing_channels: usize,
    /// Minimum gap in frames between reported points.
    pub refractory: f64,
}

impl Default for ZvcParams {
    fn default() -> Self {
        ZvcParams {
            noise_floor: 1e-3,
            min_crossing_channels: 1,
            refractory: 5.0,
        }
    }
}

impl ZvcParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_floor >= 0.0) || !(self.refractory >= 0.0) {
            return Err(Error::Config(
                "ZVC noise_floor and refractory must be non-negative".into(),
            ));
        }
        if self.min_crossing_channels == 0 {
            return Err(Error::Config("ZVC min_crossing_channels must be at least 1".into()));
        }
        Ok(())
    }
}

/// Cuts where at least `min_crossing_channels` channel velocities change
/// sign together.
///
/// A channel crosses zero between two consecutive samples whose magnitude
/// exceeds the noise floor and whose signs differ; samples inside the noise
/// band in between are skipped. The crossing time is the linear root
/// between those two samples.
pub fn zvc_segment(rec: &Recording, params: &ZvcParams) -> Result<SegmentationResult> {
    params.validate()?;
    if rec.f_max() < 2 {
        return Err(Error::Degenerate("ZVC needs at least two frames".into()));
    }
    let vel = velocities(rec);

    let mut crossings: Vec<(f64, usize)> = Vec::new();
    for ch in 0..rec.num_channels() {
        let mut last: Option<(usize, f64)> = None;
        for (t, row) in vel.iter().enumerate() {
            let v = row[ch];
            if v.abs() <= params.noise_floor {
                continue;
            }
            if let Some((t0, v0)) = last {
                if v0.signum() != v.signum() {
                    let at = t0 as f64 + (t - t0) as f64 * v0 / (v0 - v);
                    crossings.push((at, ch));
                }
            }
            last = Some((t, v));
        }
    }
    crossings.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut candidates = Vec::new();
    let mut i = 0;
    while i < crossings.len() {
        let start = crossings[i].0;
        let mut j = i;
        let mut channels = Vec::new();
        while j < crossings.len() && crossings[j].0 - start <= COINCIDENCE_FRAMES {
            if !channels.contains(&crossings[j].1) {
                channels.push(crossings[j].1);
            }
            j += 1;
        }
        if channels.len() >= params.min_crossing_channels {
            let cluster = &crossings[i..j];
            candidates.push(cluster.iter().map(|c| c.0).sum::<f64>() / cluster.len() as f64);
            i = j;
        } else {
            i += 1;
        }
    }

    let mut points: Vec<f64> = Vec::new();
    for c in candidates {
        match points.last() {
            Some(&prev) if c - prev < params.refractory => {}
            _ => points.push(c),
        }
    }
    Ok(SegmentationResult::new(rec.name(), &points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(name: &str, channels: Vec<Vec<f64>>) -> Recording {
        let n = channels[0].len();
        let frames = (0..n).map(|t| channels.iter().map(|c| c[t]).collect()).collect();
        let names = (0..channels.len()).map(|i| format!("q{i}")).collect();
        Recording::new(name, 100.0, names, frames).unwrap()
    }

    fn sine(n: usize, period: f64, phase: f64) -> Vec<f64> {
        (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * (t as f64 - phase) / period).sin())
            .collect()
    }

    #[test]
    fn sine_extrema() {
        let r = rec("s", vec![sine(200, 100.0, 0.0)]);
        let seg = zvc_segment(&r, &ZvcParams::default()).unwrap();
        // closed-form extrema of sin(2 pi t / 100)
        let expected = [25.0, 75.0, 125.0, 175.0];
        assert_eq!(seg.points().len(), expected.len(), "{:?}", seg.points());
        for (p, e) in seg.points().iter().zip(expected) {
            assert!((p - e).abs() <= 2.0, "{p} vs {e}");
        }
    }

    #[test]
    fn constant_recording_has_no_points() {
        let r = rec("c", vec![vec![0.3; 100], vec![-1.0; 100]]);
        assert!(zvc_segment(&r, &ZvcParams::default()).unwrap().points().is_empty());
    }

    #[test]
    fn coincidence_requirement() {
        let r = rec("two", vec![sine(200, 100.0, 0.0), sine(200, 100.0, 12.0)]);
        let params = ZvcParams {
            min_crossing_channels: 2,
            ..Default::default()
        };
        assert!(zvc_segment(&r, &params).unwrap().points().is_empty());
        let aligned = rec("two", vec![sine(200, 100.0, 0.0), sine(200, 100.0, 0.0)]);
        assert_eq!(zvc_segment(&aligned, &params).unwrap().points().len(), 4);
    }

    #[test]
    fn refractory_merges_to_first() {
        // extrema every 5 frames
        let r = rec("fast", vec![sine(100, 10.0, 0.0)]);
        let dense = zvc_segment(&r, &ZvcParams { refractory: 0.0, ..Default::default() }).unwrap();
        let sparse = zvc_segment(&r, &ZvcParams { refractory: 12.0, ..Default::default() }).unwrap();
        assert!(sparse.points().len() < dense.points().len());
        assert_eq!(sparse.points()[0], dense.points()[0]);
        assert!(sparse.points().windows(2).all(|w| w[1] - w[0] >= 12.0));
    }

    #[test]
    fn single_frame_is_degenerate() {
        let r = rec("one", vec![vec![1.0]]);
        assert!(matches!(
            zvc_segment(&r, &ZvcParams::default()),
            Err(Error::Degenerate(_))
        ));
    }
}
