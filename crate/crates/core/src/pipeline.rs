// SPDX-License-Identifier: MIT OR Apache-2.0

//! Evaluation of one recording at every granularity under every matching
//! approach, dataset aggregation and the static five-fold split.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    classify_conventional, classify_ink, classify_margin, ConfusionCounts, Kernel, KernelConfig,
    MarginConfig,
};
use crate::error::{Error, Result};
use crate::measures::{compute_measures, compute_psme, CountingSource, MeasureSet, PsmeConfig};
use crate::model::{
    canonicalize_points, time_ms_to_frames, GroundTruth, Granularity, Recording,
    SegmentationResult,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const NUM_FOLDS: usize = 5;

/// Ground-truth point sets evaluated at each granularity; each level
/// includes all coarser ones.
#[derive(Clone, Debug, PartialEq)]
pub struct GranularityCascade {
    pub rough: Vec<f64>,
    pub medium: Vec<f64>,
    pub fine: Vec<f64>,
}

impl GranularityCascade {
    pub fn level(&self, g: Granularity) -> &[f64] {
        match g {
            Granularity::Rough => &self.rough,
            Granularity::Medium => &self.medium,
            Granularity::Fine => &self.fine,
        }
    }
}

pub fn cascade(gt: &GroundTruth) -> GranularityCascade {
    let up_to = |level: Granularity| -> Vec<f64> {
        gt.points()
            .iter()
            .filter(|p| p.granularity <= level)
            .map(|p| p.frame)
            .collect()
    };
    GranularityCascade {
        rough: up_to(Granularity::Rough),
        medium: up_to(Granularity::Medium),
        fine: up_to(Granularity::Fine),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Conventional,
    Margin,
    Ink,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::Conventional, Approach::Margin, Approach::Ink];

    pub fn as_str(self) -> &'static str {
        match self {
            Approach::Conventional => "conventional",
            Approach::Margin => "margin",
            Approach::Ink => "ink",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// User-facing evaluation parameters. Times are in milliseconds and are
/// converted to frames per recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub margin_ms: f64,
    pub sigma_ms: f64,
    pub psme_p: f64,
    pub kernel: Kernel,
    pub psme_source: CountingSource,
    /// Use `|s - g| < margin` instead of `<=`.
    pub strict_margin: bool,
    /// Quadrature step as a fraction of sigma.
    pub quadrature_step_sigmas: f64,
    /// Integration half-width around each point, in multiples of sigma.
    pub support_radius_sigmas: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            margin_ms: 200.0,
            sigma_ms: 66.67,
            psme_p: 100.0,
            kernel: Kernel::Gaussian,
            psme_source: CountingSource::Margin,
            strict_margin: false,
            quadrature_step_sigmas: 0.01,
            support_radius_sigmas: 6.0,
        }
    }
}

/// [`EvalConfig`] converted to frames for one frame rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub margin: MarginConfig,
    pub kernel: KernelConfig,
    pub psme: PsmeConfig,
}

impl EvalConfig {
    pub fn resolve(&self, frame_rate_hz: f64) -> Result<ResolvedConfig> {
        let mut margin = MarginConfig::new(time_ms_to_frames(self.margin_ms, frame_rate_hz)?)?;
        margin.inclusive = !self.strict_margin;
        let kernel = match self.kernel {
            Kernel::Dirac => KernelConfig::dirac(),
            Kernel::Gaussian => {
                let sigma = time_ms_to_frames(self.sigma_ms, frame_rate_hz)?;
                let cfg = KernelConfig {
                    sigma,
                    kernel: Kernel::Gaussian,
                    quadrature_step: sigma * self.quadrature_step_sigmas,
                    support_radius: sigma * self.support_radius_sigmas,
                };
                cfg.validate()?;
                cfg
            }
        };
        let psme = PsmeConfig {
            penalty: self.psme_p,
            counting_source: self.psme_source,
        };
        psme.validate()?;
        Ok(ResolvedConfig {
            margin,
            kernel,
            psme,
        })
    }
}

/// How an algorithm received its input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataAccess {
    Full,
    FrameByFrame,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub algorithm: String,
    pub algorithm_params: BTreeMap<String, serde_json::Value>,
    pub data_access: DataAccess,
    pub training_api_used: bool,
    /// Wall-clock creation time; the only field allowed to differ between
    /// otherwise identical runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at_unix_ms: Option<u64>,
}

impl Provenance {
    pub fn new(algorithm: impl Into<String>) -> Self {
        Provenance {
            algorithm: algorithm.into(),
            algorithm_params: BTreeMap::new(),
            data_access: DataAccess::Full,
            training_api_used: false,
            generated_at_unix_ms: None,
        }
    }

    pub fn stamped(mut self) -> Self {
        self.generated_at_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_millis() as u64);
        self
    }
}

/// Frame-denominated values actually used, echoed next to the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedEcho {
    pub frame_rate_hz: f64,
    pub margin_frames: f64,
    pub sigma_frames: f64,
    pub quadrature_step_frames: f64,
    pub support_radius_frames: f64,
    pub psme_distance_unit: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub counts: ConfusionCounts,
    pub measures: MeasureSet,
}

impl Cell {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        Cell {
            counts,
            measures: compute_measures(&counts),
        }
    }
}

pub type CellGrid = BTreeMap<Granularity, BTreeMap<Approach, Cell>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub dataset_version: String,
    pub recording: String,
    pub f_max: u64,
    pub config: EvalConfig,
    pub resolved: ResolvedEcho,
    pub provenance: Provenance,
    pub cells: CellGrid,
    pub psme: BTreeMap<Granularity, f64>,
    /// Granularities whose PSME lacked a distance term (no ground truth).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub psme_undefined: Vec<Granularity>,
}

impl EvaluationReport {
    pub fn cell(&self, g: Granularity, a: Approach) -> &Cell {
        &self.cells[&g][&a]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Copy without the wall-clock stamp, for determinism comparisons.
    pub fn without_timestamp(&self) -> Self {
        let mut r = self.clone();
        r.provenance.generated_at_unix_ms = None;
        r
    }

    pub fn csv_rows(&self) -> Vec<String> {
        cell_rows(&self.recording, &self.cells)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in self.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

pub const CSV_HEADER: &str =
    "recording,granularity,approach,tp,tn,fp,fn,precision,recall,accuracy,f1,f1_class,mcc";

fn cell_rows(recording: &str, cells: &CellGrid) -> Vec<String> {
    let mut rows = Vec::new();
    for (g, by_approach) in cells {
        for (a, cell) in by_approach {
            let c = &cell.counts;
            let m = cell.measures.as_array();
            rows.push(format!(
                "{recording},{g},{a},{},{},{},{},{},{},{},{},{},{}",
                c.true_positives,
                c.true_negatives,
                c.false_positives,
                c.false_negatives,
                m[0],
                m[1],
                m[2],
                m[3],
                m[4],
                m[5]
            ));
        }
    }
    rows
}

/// Metadata attached to every report of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunContext {
    pub dataset_version: String,
    pub provenance: Provenance,
}

impl RunContext {
    pub fn new(dataset_version: impl Into<String>, provenance: Provenance) -> Self {
        RunContext {
            dataset_version: dataset_version.into(),
            provenance,
        }
    }
}

/// Scores one recording at every granularity with all three approaches.
pub fn evaluate_recording(
    rec: &Recording,
    gt: &GroundTruth,
    seg: &SegmentationResult,
    cfg: &EvalConfig,
    ctx: &RunContext,
) -> Result<EvaluationReport> {
    for (what, name) in [("ground truth", gt.recording_name()), ("segmentation", seg.recording_name())] {
        if name != rec.name() {
            return Err(Error::Mismatch(format!(
                "{what} refers to {name:?} but the recording is {:?}",
                rec.name()
            )));
        }
    }
    gt.validate_against(rec)?;
    seg.validate_against(rec)?;
    if ctx.provenance.algorithm.is_empty() || ctx.dataset_version.is_empty() {
        return Err(Error::Config("provenance fields must be non-empty".into()));
    }

    let resolved = cfg.resolve(rec.frame_rate_hz())?;
    let f_max = rec.f_max();
    let alg = canonicalize_points(seg.points());
    let levels = cascade(gt);

    let mut cells = CellGrid::new();
    let mut psme = BTreeMap::new();
    let mut psme_undefined = Vec::new();
    for g in Granularity::ALL {
        let gt_points = levels.level(g);
        let mut row = BTreeMap::new();
        row.insert(
            Approach::Conventional,
            Cell::from_counts(classify_conventional(gt_points, &alg, f_max)?),
        );
        row.insert(
            Approach::Margin,
            Cell::from_counts(classify_margin(gt_points, &alg, f_max, &resolved.margin)?),
        );
        row.insert(
            Approach::Ink,
            Cell::from_counts(classify_ink(gt_points, &alg, f_max, &resolved.kernel)?),
        );
        cells.insert(g, row);

        let p = compute_psme(gt_points, &alg, f_max, &resolved.psme, &resolved.margin)?;
        psme.insert(g, p.value);
        if p.undefined_distance_term {
            psme_undefined.push(g);
        }
    }

    Ok(EvaluationReport {
        schema_version: SCHEMA_VERSION,
        toolkit_version: crate::TOOLKIT_VERSION.to_owned(),
        dataset_version: ctx.dataset_version.clone(),
        recording: rec.name().to_owned(),
        f_max,
        config: cfg.clone(),
        resolved: ResolvedEcho {
            frame_rate_hz: rec.frame_rate_hz(),
            margin_frames: resolved.margin.margin,
            sigma_frames: resolved.kernel.sigma,
            quadrature_step_frames: resolved.kernel.quadrature_step,
            support_radius_frames: resolved.kernel.support_radius,
            psme_distance_unit: "frames^2".into(),
        },
        provenance: ctx.provenance.clone(),
        cells,
        psme,
        psme_undefined,
    })
}

/// Static assignment of recordings to folds: round-robin over the
/// lexicographically sorted names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    folds: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, name: &str) -> Option<usize> {
        self.folds.get(name).copied()
    }

    pub fn sizes(&self) -> [usize; NUM_FOLDS] {
        let mut sizes = [0; NUM_FOLDS];
        for &f in self.folds.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Recordings of `fold`, sorted by name.
    pub fn members(&self, fold: usize) -> Vec<&str> {
        self.folds
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.folds.iter().map(|(n, &f)| (n.as_str(), f))
    }
}

pub fn make_folds<S: AsRef<str>>(names: &[S]) -> Result<FoldAssignment> {
    let mut sorted: Vec<&str> = names.iter().map(AsRef::as_ref).collect();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < NUM_FOLDS {
        return Err(Error::InsufficientData(format!(
            "{NUM_FOLDS}-fold cross-validation needs at least {NUM_FOLDS} recordings, got {}",
            sorted.len()
        )));
    }
    Ok(FoldAssignment {
        folds: sorted
            .into_iter()
            .enumerate()
            .map(|(i, n)| (n.to_owned(), i % NUM_FOLDS))
            .collect(),
    })
}

/// Dataset-level view over several reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub schema_version: u32,
    pub recordings: Vec<String>,
    /// Counts summed over recordings, measures recomputed from the sums.
    pub pooled: CellGrid,
    /// Per-recording measures averaged with equal weight.
    pub mean_of_scores: BTreeMap<Granularity, BTreeMap<Approach, MeasureSet>>,
    pub psme_mean: BTreeMap<Granularity, f64>,
    pub psme_sum: BTreeMap<Granularity, f64>,
}

impl DatasetSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in cell_rows("pooled", &self.pooled) {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

pub fn aggregate(reports: &[EvaluationReport]) -> Result<DatasetSummary> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InsufficientData("no reports to aggregate".into()))?;

    let mut pooled = CellGrid::new();
    let mut mean_of_scores = BTreeMap::new();
    for (&g, row) in &first.cells {
        let mut pooled_row = BTreeMap::new();
        let mut mean_row = BTreeMap::new();
        for &a in row.keys() {
            let cells: Vec<&Cell> = reports.iter().map(|r| r.cell(g, a)).collect();
            let sum = cells
                .iter()
                .skip(1)
                .fold(cells[0].counts, |acc, c| acc.pooled(&c.counts));
            pooled_row.insert(a, Cell::from_counts(sum));
            let mean = MeasureSet::mean(cells.iter().map(|c| &c.measures))
                .expect("non-empty report list");
            mean_row.insert(a, mean);
        }
        pooled.insert(g, pooled_row);
        mean_of_scores.insert(g, mean_row);
    }

    let n = reports.len() as f64;
    let psme_sum: BTreeMap<Granularity, f64> = Granularity::ALL
        .iter()
        .map(|&g| (g, reports.iter().map(|r| r.psme[&g]).sum()))
        .collect();
    let psme_mean = psme_sum.iter().map(|(&g, &s)| (g, s / n)).collect();

    Ok(DatasetSummary {
        schema_version: SCHEMA_VERSION,
        recordings: reports.iter().map(|r| r.recording.clone()).collect(),
        pooled,
        mean_of_scores,
        psme_mean,
        psme_sum,
    })
}
