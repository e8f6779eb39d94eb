// SPDX-License-Identifier: MIT OR Apache-2.0

//! Domain types shared by every other module and their file formats.
//!
//! All times are real-valued frame indices. Values configured in
//! milliseconds are converted with the frame rate of the recording they
//! are applied to.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer than this many frames are considered the same point.
pub const MERGE_TOLERANCE: f64 = 1e-9;

/// Converts a duration in milliseconds to frames.
pub fn time_ms_to_frames(t_ms: f64, frame_rate_hz: f64) -> Result<f64> {
    check_rate(frame_rate_hz)?;
    Ok(t_ms * frame_rate_hz / 1000.0)
}

/// Inverse of [`time_ms_to_frames`].
pub fn frames_to_ms(frames: f64, frame_rate_hz: f64) -> Result<f64> {
    check_rate(frame_rate_hz)?;
    Ok(frames * 1000.0 / frame_rate_hz)
}

fn check_rate(frame_rate_hz: f64) -> Result<()> {
    if frame_rate_hz.is_finite() && frame_rate_hz > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "frame rate must be positive, got {frame_rate_hz}"
        )))
    }
}

/// Sorts `points` ascending and merges runs of points closer than
/// [`MERGE_TOLERANCE`] into their mean.
pub fn canonicalize_points(points: &[f64]) -> Vec<f64> {
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut out = Vec::with_capacity(sorted.len());
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] - sorted[j - 1] < MERGE_TOLERANCE {
            j += 1;
        }
        if j - i == 1 {
            out.push(sorted[i]);
        } else {
            let run = &sorted[i..j];
            out.push(run.iter().sum::<f64>() / run.len() as f64);
        }
        i = j;
    }
    out
}

/// Checks every point lies in `[0, f_max]`.
pub(crate) fn check_range(points: &[f64], f_max: u64, what: &str) -> Result<()> {
    let upper = f_max as f64;
    match points
        .iter()
        .find(|&&p| !p.is_finite() || p < 0.0 || p > upper)
    {
        Some(p) => Err(Error::Domain(format!(
            "{what} point {p} outside [0, {f_max}]"
        ))),
        None => Ok(()),
    }
}

/// A multi-channel sampled trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Recording {
    name: String,
    frame_rate_hz: f64,
    channels: Vec<String>,
    frames: Vec<Vec<f64>>,
}

impl Recording {
    pub fn new(
        name: impl Into<String>,
        frame_rate_hz: f64,
        channels: Vec<String>,
        frames: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_rate(frame_rate_hz)?;
        if frames.is_empty() {
            return Err(Error::Dimension("recording has no frames".into()));
        }
        for (i, row) in frames.iter().enumerate() {
            if row.len() != channels.len() {
                return Err(Error::Dimension(format!(
                    "frame {i} has {} values but {} channels are declared",
                    row.len(),
                    channels.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("frame {i} contains non-finite value {v}")));
            }
        }
        Ok(Recording {
            name: name.into(),
            frame_rate_hz,
            channels,
            frames,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    /// Number of frames.
    pub fn f_max(&self) -> u64 {
        self.frames.len() as u64
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples of one channel over time.
    pub fn channel(&self, index: usize) -> Vec<f64> {
        self.frames.iter().map(|row| row[index]).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        load_recording(path, RecordingFormat::from_path(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Writes the CSV body; the frame rate goes to the sidecar written by
    /// [`Recording::save`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for ch in &self.channels {
            out.push(',');
            out.push_str(ch);
        }
        out.push('\n');
        for (i, row) in self.frames.iter().enumerate() {
            out.push_str(&format!("{}", i as f64 / self.frame_rate_hz));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Writes the recording in the format implied by the path extension.
    /// CSV output also writes the `<stem>.meta.json` sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        match RecordingFormat::from_path(path)? {
            RecordingFormat::Json => write_file(path, self.to_json()?),
            RecordingFormat::Csv => {
                write_file(path, self.to_csv())?;
                let meta = serde_json::json!({ "frame_rate_hz": self.frame_rate_hz });
                write_file(sidecar_path(path), serde_json::to_string(&meta)?)
            }
        }
    }
}

#[derive(Deserialize)]
struct RecordingFile {
    name: String,
    frame_rate_hz: f64,
    channels: Vec<String>,
    frames: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for Recording {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RecordingFile::deserialize(d)?;
        Recording::new(raw.name, raw.frame_rate_hz, raw.channels, raw.frames)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordingFormat {
    Json,
    Csv,
}

impl RecordingFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Ok(RecordingFormat::Json),
            Some(e) if e.eq_ignore_ascii_case("csv") => Ok(RecordingFormat::Csv),
            _ => Err(Error::Parse(format!(
                "cannot infer recording format from {}",
                path.display()
            ))),
        }
    }
}

impl FromStr for RecordingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(RecordingFormat::Json),
            "csv" => Ok(RecordingFormat::Csv),
            other => Err(Error::Parse(format!("unknown recording format {other:?}"))),
        }
    }
}

/// Sidecar holding the frame rate of a CSV recording: `<stem>.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

pub fn load_recording(path: &Path, format: RecordingFormat) -> Result<Recording> {
    let text = read_file(path)?;
    match format {
        RecordingFormat::Json => Ok(serde_json::from_str(&text)?),
        RecordingFormat::Csv => {
            #[derive(Deserialize)]
            struct Meta {
                frame_rate_hz: f64,
            }
            let meta: Meta = serde_json::from_str(&read_file(&sidecar_path(path))?)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            parse_csv(name, meta.frame_rate_hz, &text)
        }
    }
}

fn parse_csv(name: String, frame_rate_hz: f64, text: &str) -> Result<Recording> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.get(0) != Some("t") {
        return Err(Error::Parse("CSV header must start with column `t`".into()));
    }
    let channels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut frames = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {i}: {v:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        frames.push(row);
    }
    Recording::new(name, frame_rate_hz, channels, frames)
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Label level of a ground-truth point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// Activities, e.g. jumping vs. walking.
    Rough,
    /// Actions, e.g. left vs. right step.
    Medium,
    /// Motion primitives, e.g. lifting vs. setting down a foot.
    Fine,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [Granularity::Rough, Granularity::Medium, Granularity::Fine];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Rough => "rough",
            Granularity::Medium => "medium",
            Granularity::Fine => "fine",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelledPoint {
    pub frame: f64,
    pub granularity: Granularity,
}

/// Ground-truth segmentation points of one recording, sorted by time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundTruth {
    #[serde(rename = "recording")]
    recording_name: String,
    points: Vec<LabelledPoint>,
}

impl GroundTruth {
    /// Sorts the points; rejects non-finite, negative or duplicate times.
    pub fn new(recording_name: impl Into<String>, mut points: Vec<LabelledPoint>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.frame.is_finite() || p.frame < 0.0) {
            return Err(Error::Domain(format!(
                "ground-truth point {} is negative or non-finite",
                p.frame
            )));
        }
        points.sort_by(|a, b| a.frame.total_cmp(&b.frame));
        if let Some(w) = points.windows(2).find(|w| w[1].frame - w[0].frame < MERGE_TOLERANCE) {
            return Err(Error::Domain(format!(
                "duplicate ground-truth point at frame {}",
                w[0].frame
            )));
        }
        Ok(GroundTruth {
            recording_name: recording_name.into(),
            points,
        })
    }

    pub fn recording_name(&self) -> &str {
        &self.recording_name
    }

    pub fn points(&self) -> &[LabelledPoint] {
        &self.points
    }

    pub fn frames(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.frame).collect()
    }

    pub fn validate_against(&self, recording: &Recording) -> Result<()> {
        check_range(&self.frames(), recording.f_max(), "ground-truth")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&read_file(path.as_ref())?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path, serde_json::to_string_pretty(self)?)
    }
}

impl<'de> Deserialize<'de> for GroundTruth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            recording: String,
            points: Vec<LabelledPoint>,
        }
        let raw = Raw::deserialize(d)?;
        GroundTruth::new(raw.recording, raw.points).map_err(serde::de::Error::custom)
    }
}

/// Points reported by an algorithm for one recording, kept canonical.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentationResult {
    #[serde(rename = "recording")]
    recording_name: String,
    points: Vec<f64>,
}

impl SegmentationResult {
    pub fn new(recording_name: impl Into<String>, points: &[f64]) -> Self {
        SegmentationResult {
            recording_name: recording_name.into(),
            points: canonicalize_points(points),
        }
    }

    pub fn recording_name(&self) -> &str {
        &self.recording_name
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn validate_against(&self, recording: &Recording) -> Result<()> {
        check_range(&self.points, recording.f_max(), "segmentation")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&read_file(path.as_ref())?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path, serde_json::to_string_pretty(self)?)
    }
}

impl<'de> Deserialize<'de> for SegmentationResult {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            recording: String,
            points: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        Ok(SegmentationResult::new(raw.recording, &raw.points))
    }
}
