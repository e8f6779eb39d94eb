// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Recording, SegmentationResult};

/// Absolute error level used when the fit window reconstructs perfectly.
const RANK_DEFICIENT_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaParams {
    /// Frames used to fit each subspace.
    pub init_window: usize,
    /// Fraction of variance the retained components must explain.
    pub retained_energy: f64,
    /// Factor over the fit-window error that signals a new motion.
    pub error_ratio_threshold: f64,
}

impl Default for PcaParams {
    fn default() -> Self {
        PcaParams {
            init_window: 40,
            retained_energy: 0.9,
            error_ratio_threshold: 3.0,
        }
    }
}

impl PcaParams {
    pub fn validate(&self) -> Result<()> {
        if self.init_window < 2 {
            return Err(Error::Config("PCA init_window must be at least 2".into()));
        }
        if !(self.retained_energy > 0.0 && self.retained_energy <= 1.0) {
            return Err(Error::Config("PCA retained_energy must lie in (0, 1]".into()));
        }
        if !(self.error_ratio_threshold > 1.0) {
            return Err(Error::Config("PCA error_ratio_threshold must exceed 1".into()));
        }
        Ok(())
    }

    fn trailing(&self) -> usize {
        (self.init_window / 4).max(1)
    }
}

/// Principal subspace fitted to a block of frames.
struct Subspace {
    mean: DVector<f64>,
    /// Orthonormal basis, one column per retained component.
    basis: DMatrix<f64>,
}

impl Subspace {
    fn fit(rows: &[Vec<f64>], retained_energy: f64) -> Self {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = DVector::zeros(d);
        for r in rows {
            mean += DVector::from_column_slice(r);
        }
        mean /= n;

        let mut cov = DMatrix::zeros(d, d);
        for r in rows {
            let c = DVector::from_column_slice(r) - &mean;
            cov += &c * c.transpose();
        }
        cov /= n;

        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then_with(|| a.cmp(&b))
        });

        let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        let mut columns = Vec::new();
        if total > RANK_DEFICIENT_EPS {
            let mut acc = 0.0;
            for &i in &order {
                if acc >= retained_energy * total {
                    break;
                }
                acc += eig.eigenvalues[i].max(0.0);
                let mut v = eig.eigenvectors.column(i).into_owned();
                // sign convention: first non-negligible component positive
                if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
                    if *first < 0.0 {
                        v = -v;
                    }
                }
                columns.push(v);
            }
        }
        let basis = if columns.is_empty() {
            DMatrix::zeros(d, 0)
        } else {
            DMatrix::from_columns(&columns)
        };
        Subspace { mean, basis }
    }

    /// Squared norm of the part of `row` outside the subspace.
    fn residual(&self, row: &[f64]) -> f64 {
        let c = DVector::from_column_slice(row) - &self.mean;
        let proj = &self.basis * (self.basis.transpose() * &c);
        (c - proj).norm_squared()
    }
}

/// Per-frame reconstruction error of `frames[from..]` against a subspace
/// fitted on `frames[fit_start..fit_start + init_window]`, plus the mean
/// error over the fit window itself.
pub fn reconstruction_errors(
    rec: &Recording,
    params: &PcaParams,
    fit_start: usize,
) -> Result<(f64, Vec<f64>)> {
    params.validate()?;
    let frames = rec.frames();
    let fit_end = fit_start + params.init_window;
    if fit_end > frames.len() {
        return Err(Error::Degenerate("fit window exceeds recording".into()));
    }
    let sub = Subspace::fit(&frames[fit_start..fit_end], params.retained_energy);
    let baseline = frames[fit_start..fit_end]
        .iter()
        .map(|r| sub.residual(r))
        .sum::<f64>()
        / params.init_window as f64;
    let errors = frames[fit_end..].iter().map(|r| sub.residual(r)).collect();
    Ok((baseline, errors))
}

/// Sliding-window PCA segmentation.
///
/// A subspace is fitted on `init_window` frames; following frames are
/// projected and their reconstruction error tracked. Once the mean error of
/// the last `init_window / 4` frames exceeds `error_ratio_threshold` times
/// the fit-window error, a cut is placed at the first frame of that trailing
/// block whose own error exceeds the level, and fitting restarts there.
/// If the fit window reconstructs perfectly the level is an absolute 1e-9.
pub fn pca_segment(rec: &Recording, params: &PcaParams) -> Result<SegmentationResult> {
    params.validate()?;
    let n = rec.frames().len();
    if n < 2 * params.init_window {
        return Err(Error::Degenerate(format!(
            "PCA needs at least {} frames, recording has {n}",
            2 * params.init_window
        )));
    }
    let trailing = params.trailing();
    let mut points = Vec::new();
    let mut start = 0;

    while start + params.init_window < n {
        let (baseline, errors) = reconstruction_errors(rec, params, start)?;
        let level = if baseline <= RANK_DEFICIENT_EPS {
            RANK_DEFICIENT_EPS
        } else {
            params.error_ratio_threshold * baseline
        };
        let offset = start + params.init_window;

        let mut cut = None;
        let mut sum = 0.0;
        for i in 0..errors.len() {
            sum += errors[i];
            if i >= trailing {
                sum -= errors[i - trailing];
            }
            if i + 1 >= trailing && sum / trailing as f64 > level {
                let block = i + 1 - trailing..=i;
                let onset = block
                    .clone()
                    .find(|&k| errors[k] > level)
                    .unwrap_or(*block.start());
                cut = Some(offset + onset);
                break;
            }
        }
        match cut {
            Some(c) => {
                points.push(c as f64);
                start = c;
            }
            None => break,
        }
    }
    Ok(SegmentationResult::new(rec.name(), &points))
}
