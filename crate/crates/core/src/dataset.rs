// SPDX-License-Identifier: MIT OR Apache-2.0

//! On-disk dataset layout.
//!
//! A dataset directory holds, per recording `<name>`:
//!
//! * `<name>.json` or `<name>.csv` (+ `<name>.meta.json`): the recording
//! * `<name>.gt.json`: its ground truth
//!
//! and optionally `dataset.json` with `{"version": "..."}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{read_file, write_file, GroundTruth, Recording};

pub const GT_SUFFIX: &str = ".gt.json";
pub const SEG_SUFFIX: &str = ".seg.json";
pub const MANIFEST: &str = "dataset.json";
pub const UNVERSIONED: &str = "unversioned";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub recording: Recording,
    pub ground_truth: GroundTruth,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub version: String,
    /// Sorted by recording name.
    pub entries: Vec<Entry>,
}

impl Dataset {
    pub fn new(version: impl Into<String>, mut entries: Vec<Entry>) -> Result<Self> {
        for e in &entries {
            if e.ground_truth.recording_name() != e.recording.name() {
                return Err(Error::Mismatch(format!(
                    "ground truth for {:?} paired with recording {:?}",
                    e.ground_truth.recording_name(),
                    e.recording.name()
                )));
            }
            e.ground_truth.validate_against(&e.recording)?;
        }
        entries.sort_by(|a, b| a.recording.name().cmp(b.recording.name()));
        Ok(Dataset {
            version: version.into(),
            entries,
        })
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let listing = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut names = Vec::new();
        for item in listing {
            let item = item.map_err(|e| Error::io(dir, e))?;
            let file = item.file_name().to_string_lossy().into_owned();
            if let Some(name) = file.strip_suffix(GT_SUFFIX) {
                names.push(name.to_owned());
            }
        }
        if names.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no *{GT_SUFFIX} files in {}",
                dir.display()
            )));
        }

        let mut entries = Vec::with_capacity(names.len());
        for name in names {
            let recording = Recording::load(recording_path(dir, &name)?)?;
            if recording.name() != name {
                return Err(Error::Mismatch(format!(
                    "file {name:?} holds recording {:?}",
                    recording.name()
                )));
            }
            let ground_truth = GroundTruth::load(dir.join(format!("{name}{GT_SUFFIX}")))?;
            entries.push(Entry {
                recording,
                ground_truth,
            });
        }

        let manifest = dir.join(MANIFEST);
        let version = if manifest.exists() {
            serde_json::from_str::<Manifest>(&read_file(&manifest)?)?.version
        } else {
            UNVERSIONED.to_owned()
        };
        Dataset::new(version, entries)
    }

    /// Writes recordings as JSON plus ground truth and manifest.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for e in &self.entries {
            let name = e.recording.name();
            e.recording.save(dir.join(format!("{name}.json")))?;
            e.ground_truth.save(dir.join(format!("{name}{GT_SUFFIX}")))?;
        }
        let manifest = Manifest {
            version: self.version.clone(),
        };
        write_file(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.recording.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.recording.name() == name)
    }
}

fn recording_path(dir: &Path, name: &str) -> Result<PathBuf> {
    ["json", "csv"]
        .iter()
        .map(|ext| dir.join(format!("{name}.{ext}")))
        .find(|p| p.exists())
        .ok_or_else(|| {
            Error::Parse(format!(
                "no recording file for {name:?} in {}",
                dir.display()
            ))
        })
}
