// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic data: the seven fixed segmentation scenarios, and recordings
//! with hierarchical ground truth built from simple motion segments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Entry};
use crate::error::{Error, Result};
use crate::model::{GroundTruth, Granularity, LabelledPoint, Recording};

/// A ground truth / algorithm point pair for comparing approaches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: char,
    pub gt_points: Vec<f64>,
    pub alg_points: Vec<f64>,
    pub f_max: u64,
    /// Geometry not fully determined by the published description.
    pub reconstructed: bool,
}

const SCENARIO_GT: [f64; 3] = [20.0, 50.0, 80.0];
const EXTRA_POINT: f64 = 35.0;

/// Scenarios a to g on 100 frames with ground truth {20, 50, 80}.
///
/// a) exact; b) every point one frame late; c) b plus an extra point at 35;
/// d) c with the last point ten frames late; e), f), g) add 1, 4 and 5
/// frames to every offset of the preceding scenario.
pub fn make_scenarios() -> Vec<ScenarioSpec> {
    // (id, offset of the first two points, offset of the last, extra point)
    let rows: [(char, f64, f64, bool); 7] = [
        ('a', 0.0, 0.0, false),
        ('b', 1.0, 1.0, false),
        ('c', 1.0, 1.0, true),
        ('d', 1.0, 10.0, true),
        ('e', 2.0, 11.0, true),
        ('f', 6.0, 15.0, true),
        ('g', 11.0, 20.0, true),
    ];
    rows.iter()
        .map(|&(id, early, last, extra)| {
            let mut alg = vec![
                SCENARIO_GT[0] + early,
                SCENARIO_GT[1] + early,
                SCENARIO_GT[2] + last,
            ];
            if extra {
                alg.push(EXTRA_POINT);
                alg.sort_by(f64::total_cmp);
            }
            ScenarioSpec {
                id,
                gt_points: SCENARIO_GT.to_vec(),
                alg_points: alg,
                f_max: 100,
                reconstructed: matches!(id, 'c' | 'd' | 'e' | 'f'),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionKind {
    /// Hold the current posture.
    Still,
    /// Move linearly by the channel amplitudes.
    Ramp,
    /// Repeated raised-cosine excursions (one per repetition) returning to
    /// the starting posture, e.g. steps or jumps.
    Oscillation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    #[serde(default)]
    pub label: Option<String>,
    pub kind: MotionKind,
    pub duration: usize,
    /// One amplitude per channel.
    pub amplitudes: Vec<f64>,
    #[serde(default = "one")]
    pub repetitions: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub name: String,
    pub seed: u64,
    pub frame_rate_hz: f64,
    #[serde(default)]
    pub noise_std: f64,
    pub activities: Vec<Activity>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .activities
            .first()
            .ok_or_else(|| Error::Config(format!("{}: no activities", self.name)))?;
        let channels = first.amplitudes.len();
        if channels == 0 {
            return Err(Error::Config(format!("{}: no channels", self.name)));
        }
        if !(self.frame_rate_hz > 0.0) || !(self.noise_std >= 0.0) {
            return Err(Error::Config(format!(
                "{}: frame rate must be positive and noise non-negative",
                self.name
            )));
        }
        for (i, a) in self.activities.iter().enumerate() {
            if a.amplitudes.len() != channels {
                return Err(Error::Config(format!(
                    "{}: activity {i} has {} amplitudes, expected {channels}",
                    self.name,
                    a.amplitudes.len()
                )));
            }
            if a.repetitions == 0 || a.duration < 4 * a.repetitions {
                return Err(Error::Config(format!(
                    "{}: activity {i} needs at least 4 frames per repetition",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Builds the recording and its ground truth.
///
/// Rough points sit at activity boundaries, medium points at repetition
/// boundaries inside an oscillation, fine points at the turning point of
/// every repetition.
pub fn make_recording(spec: &SynthSpec) -> Result<(Recording, GroundTruth)> {
    spec.validate()?;
    let channels = spec.activities[0].amplitudes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(e.to_string()))?;

    let mut frames: Vec<Vec<f64>> = Vec::new();
    let mut points = Vec::new();
    let mut posture = vec![0.0; channels];
    let mut start = 0usize;

    for (i, act) in spec.activities.iter().enumerate() {
        if i > 0 {
            points.push(LabelledPoint {
                frame: start as f64,
                granularity: Granularity::Rough,
            });
        }
        let rep_len = act.duration as f64 / act.repetitions as f64;
        for t in 0..act.duration {
            let u = t as f64;
            let row = (0..channels)
                .map(|c| {
                    let a = act.amplitudes[c];
                    match act.kind {
                        MotionKind::Still => posture[c],
                        MotionKind::Ramp => posture[c] + a * u / act.duration as f64,
                        MotionKind::Oscillation => {
                            let phase = (u % rep_len) / rep_len;
                            posture[c]
                                + a * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * phase).cos())
                        }
                    }
                })
                .collect();
            frames.push(row);
        }
        if act.kind == MotionKind::Ramp {
            for (p, a) in posture.iter_mut().zip(&act.amplitudes) {
                *p += a;
            }
        }
        if act.kind == MotionKind::Oscillation {
            for r in 0..act.repetitions {
                let rep_start = start as f64 + r as f64 * rep_len;
                if r > 0 {
                    points.push(LabelledPoint {
                        frame: rep_start.round(),
                        granularity: Granularity::Medium,
                    });
                }
                points.push(LabelledPoint {
                    frame: (rep_start + rep_len / 2.0).round(),
                    granularity: Granularity::Fine,
                });
            }
        }
        start += act.duration;
    }

    if spec.noise_std > 0.0 {
        for row in &mut frames {
            for v in row.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
    }

    let names = (0..channels).map(|c| format!("q{c}")).collect();
    let recording = Recording::new(spec.name.clone(), spec.frame_rate_hz, names, frames)?;
    let gt = GroundTruth::new(spec.name.clone(), points)?;
    gt.validate_against(&recording)?;
    Ok((recording, gt))
}

/// A generator input describing a whole dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    #[serde(default = "default_version")]
    pub version: String,
    pub recordings: Vec<SynthSpec>,
}

fn default_version() -> String {
    "synthetic-1".into()
}

/// Accepts either a single recording spec or a dataset spec.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GeneratorInput {
    Dataset(DatasetSpec),
    Single(SynthSpec),
}

impl GeneratorInput {
    pub fn into_dataset_spec(self) -> DatasetSpec {
        match self {
            GeneratorInput::Dataset(d) => d,
            GeneratorInput::Single(s) => DatasetSpec {
                version: default_version(),
                recordings: vec![s],
            },
        }
    }
}

pub fn make_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let entries = spec
        .recordings
        .iter()
        .map(|s| {
            make_recording(s).map(|(recording, ground_truth)| Entry {
                recording,
                ground_truth,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(spec.version.clone(), entries)
}

/// A small dataset of `n` recordings mixing still phases, ramps and walks
/// with many steps; used for demos, the baseline runner and tests.
pub fn demo_dataset_spec(n: usize, seed: u64) -> DatasetSpec {
    let recordings = (0..n)
        .map(|i| {
            let steps = 3 + i % 4;
            let amp = 0.4 + 0.1 * (i % 3) as f64;
            SynthSpec {
                name: format!("synth_{i:02}"),
                seed: seed.wrapping_add(i as u64),
                frame_rate_hz: 100.0,
                noise_std: 0.0,
                activities: vec![
                    Activity {
                        label: Some("stand".into()),
                        kind: MotionKind::Still,
                        duration: 60,
                        amplitudes: vec![0.0, 0.0, 0.0],
                        repetitions: 1,
                    },
                    Activity {
                        label: Some("jump".into()),
                        kind: MotionKind::Oscillation,
                        duration: 80,
                        amplitudes: vec![0.2, 1.0, 0.6],
                        repetitions: 1,
                    },
                    Activity {
                        label: Some("walk".into()),
                        kind: MotionKind::Oscillation,
                        duration: 60 * steps,
                        amplitudes: vec![amp, 0.3, -amp],
                        repetitions: steps,
                    },
                    Activity {
                        label: Some("turn".into()),
                        kind: MotionKind::Ramp,
                        duration: 70,
                        amplitudes: vec![0.5, 0.0, 0.5],
                        repetitions: 1,
                    },
                ],
            }
        })
        .collect();
    DatasetSpec {
        version: format!("demo-{n}-{seed}"),
        recordings,
    }
}
