// SPDX-License-Identifier: MIT OR Apache-2.0

//! Ratio measures over a confusion matrix and the penalised squared minimum
//! error (PSME).

use serde::{Deserialize, Serialize};

use crate::classifiers::{classify_conventional, classify_margin, ConfusionCounts, MarginConfig};
use crate::error::{Error, Result};
use crate::model::canonicalize_points;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSet {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub f1_class: f64,
    pub mcc: f64,
}

impl MeasureSet {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.precision,
            self.recall,
            self.accuracy,
            self.f1,
            self.f1_class,
            self.mcc,
        ]
    }

    pub const NAMES: [&'static str; 6] =
        ["precision", "recall", "accuracy", "f1", "f1_class", "mcc"];

    /// Arithmetic mean of each measure.
    pub fn mean<'a>(sets: impl IntoIterator<Item = &'a MeasureSet>) -> Option<MeasureSet> {
        let mut sum = [0.0; 6];
        let mut n = 0usize;
        for set in sets {
            for (acc, v) in sum.iter_mut().zip(set.as_array()) {
                *acc += v;
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let m = sum.map(|v| v / n as f64);
        Some(MeasureSet {
            precision: m[0],
            recall: m[1],
            accuracy: m[2],
            f1: m[3],
            f1_class: m[4],
            mcc: m[5],
        })
    }
}

fn ratio(num: f64, den: f64, if_zero: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        if_zero
    }
}

/// Evaluates the six measures.
///
/// Zero denominators: precision is 0 when nothing was reported; recall is 1
/// when there is no ground truth (`tp + fn = 0` only happens then); F1 and
/// F1^Class are 1 when there is no error and nothing to find; MCC is 0 when
/// any factor under the root vanishes.
pub fn compute_measures(counts: &ConfusionCounts) -> MeasureSet {
    let tp = counts.true_positives;
    let tn = counts.true_negatives;
    let fp = counts.false_positives;
    let fn_ = counts.false_negatives;

    let radicand = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if radicand > 0.0 {
        ((tp * tn - fp * fn_) / radicand.sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    };

    MeasureSet {
        precision: ratio(tp, tp + fp, 0.0),
        recall: ratio(tp, tp + fn_, 1.0),
        accuracy: ratio(tp + tn, tp + tn + fp + fn_, 0.0),
        f1: ratio(2.0 * tp, 2.0 * tp + fp + fn_, 1.0),
        f1_class: ratio(2.0 * (tp + tn), 2.0 * (tp + tn) + fp + fn_, 1.0),
        mcc,
    }
}

/// Which matching approach supplies `fp` and `fn` to PSME.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingSource {
    #[default]
    Margin,
    Conventional,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsmeConfig {
    /// Penalty per false positive or false negative, in frames squared.
    pub penalty: f64,
    #[serde(default)]
    pub counting_source: CountingSource,
}

impl Default for PsmeConfig {
    fn default() -> Self {
        PsmeConfig {
            penalty: 100.0,
            counting_source: CountingSource::Margin,
        }
    }
}

impl PsmeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.penalty.is_finite() && self.penalty >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "PSME penalty must be non-negative, got {}",
                self.penalty
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Psme {
    pub value: f64,
    /// Set when algorithm points exist but the ground truth is empty; the
    /// distance term is then undefined and only the penalty is reported.
    pub undefined_distance_term: bool,
}

/// `p * (fp + fn) + sum_i min_j (s_i - g_j)^2` with distances in frames.
pub fn compute_psme(
    gt: &[f64],
    alg: &[f64],
    f_max: u64,
    cfg: &PsmeConfig,
    margin_cfg: &MarginConfig,
) -> Result<Psme> {
    cfg.validate()?;
    let gt = canonicalize_points(gt);
    let alg = canonicalize_points(alg);

    if gt.is_empty() && !alg.is_empty() {
        return Ok(Psme {
            value: cfg.penalty * alg.len() as f64,
            undefined_distance_term: true,
        });
    }

    let counts = match cfg.counting_source {
        CountingSource::Margin => classify_margin(&gt, &alg, f_max, margin_cfg)?,
        CountingSource::Conventional => classify_conventional(&gt, &alg, f_max)?,
    };
    let distance: f64 = alg
        .iter()
        .map(|&s| nearest_squared(s, &gt))
        .sum();
    Ok(Psme {
        value: cfg.penalty * (counts.false_positives + counts.false_negatives) + distance,
        undefined_distance_term: false,
    })
}

/// Squared distance from `x` to the nearest element of the sorted, non-empty `points`.
fn nearest_squared(x: f64, points: &[f64]) -> f64 {
    let idx = points.partition_point(|&p| p < x);
    let mut best = f64::INFINITY;
    for j in [idx.wrapping_sub(1), idx] {
        if let Some(&p) = points.get(j) {
            best = best.min((x - p) * (x - p));
        }
    }
    best
}

/// Rounds half away from zero to two decimals, for presentation only.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cc(tp: f64, tn: f64, fp: f64, fn_: f64) -> ConfusionCounts {
        ConfusionCounts {
            true_positives: tp,
            true_negatives: tn,
            false_positives: fp,
            false_negatives: fn_,
            f_max: (tp + tn + fp + fn_) as u64,
        }
    }

    fn rounded(m: &MeasureSet) -> [f64; 6] {
        m.as_array().map(round2)
    }

    #[test]
    fn zvc_margin_rough_column() {
        let m = compute_measures(&cc(9.0, 2600.0, 174.0, 0.0));
        assert_eq!(rounded(&m), [0.05, 1.00, 0.94, 0.09, 0.97, 0.21]);
    }

    #[test]
    fn ssav_margin_rough_column() {
        let m = compute_measures(&cc(6.0, 2705.0, 69.0, 3.0));
        assert_eq!(rounded(&m), [0.08, 0.67, 0.97, 0.14, 0.99, 0.23]);
    }

    #[test]
    fn perfect_classifier() {
        let m = compute_measures(&cc(1.0, 1.0, 0.0, 0.0));
        assert_eq!(m.as_array(), [1.0; 6]);
    }

    #[test]
    fn zero_denominators() {
        // nothing reported, nothing to find
        let m = compute_measures(&cc(0.0, 10.0, 0.0, 0.0));
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.mcc, 0.0);
        // nothing reported, something missed
        let m = compute_measures(&cc(0.0, 9.0, 0.0, 1.0));
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn psme_examples() {
        let margin = MarginConfig::new(20.0).unwrap();
        let p = PsmeConfig::default();
        assert_eq!(compute_psme(&[10.0], &[10.0], 100, &p, &margin).unwrap().value, 0.0);
        assert_eq!(compute_psme(&[10.0], &[13.0], 100, &p, &margin).unwrap().value, 9.0);
        assert_eq!(compute_psme(&[10.0], &[40.0], 100, &p, &margin).unwrap().value, 1100.0);
    }

    #[test]
    fn psme_conventional_source() {
        let margin = MarginConfig::new(20.0).unwrap();
        let p = PsmeConfig {
            penalty: 100.0,
            counting_source: CountingSource::Conventional,
        };
        assert_eq!(compute_psme(&[10.0], &[13.0], 100, &p, &margin).unwrap().value, 209.0);
    }

    #[test]
    fn psme_without_ground_truth_is_flagged() {
        let margin = MarginConfig::new(20.0).unwrap();
        let r = compute_psme(&[], &[1.0, 2.0], 100, &PsmeConfig::default(), &margin).unwrap();
        assert_eq!(r.value, 200.0);
        assert!(r.undefined_distance_term);
        let r = compute_psme(&[], &[], 100, &PsmeConfig::default(), &margin).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(!r.undefined_distance_term);
    }

    #[test]
    fn negative_penalty_rejected() {
        let margin = MarginConfig::new(20.0).unwrap();
        let p = PsmeConfig {
            penalty: -1.0,
            ..Default::default()
        };
        assert!(compute_psme(&[1.0], &[1.0], 10, &p, &margin).is_err());
    }

    fn arb_counts() -> impl Strategy<Value = ConfusionCounts> {
        (0.0f64..500.0, 0.0f64..5000.0, 0.0f64..500.0, 0.0f64..500.0)
            .prop_map(|(tp, tn, fp, fn_)| cc(tp, tn, fp, fn_))
    }

    proptest! {
        #[test]
        fn bounds_hold(c in arb_counts()) {
            let m = compute_measures(&c);
            for v in [m.precision, m.recall, m.accuracy, m.f1, m.f1_class] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((-1.0..=1.0).contains(&m.mcc));
        }

        #[test]
        fn f1_is_harmonic_mean(c in arb_counts()) {
            let m = compute_measures(&c);
            prop_assume!(c.true_positives > 1e-6);
            let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
            prop_assert!((m.f1 - h).abs() < 1e-9);
        }

        #[test]
        fn scale_invariant(c in arb_counts(), lambda in 0.01f64..100.0) {
            let scaled = cc(
                c.true_positives * lambda,
                c.true_negatives * lambda,
                c.false_positives * lambda,
                c.false_negatives * lambda,
            );
            let a = compute_measures(&c).as_array();
            let b = compute_measures(&scaled).as_array();
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn psme_monotone_in_penalty(
            gt in prop::collection::vec(0u32..100, 1..6),
            alg in prop::collection::vec(0u32..100, 0..6),
            p1 in 0.0f64..500.0,
            dp in 0.0f64..500.0,
        ) {
            let gt: Vec<f64> = gt.into_iter().map(f64::from).collect();
            let alg: Vec<f64> = alg.into_iter().map(f64::from).collect();
            let margin = MarginConfig::new(5.0).unwrap();
            let lo = PsmeConfig { penalty: p1, ..Default::default() };
            let hi = PsmeConfig { penalty: p1 + dp, ..Default::default() };
            let a = compute_psme(&gt, &alg, 100, &lo, &margin).unwrap().value;
            let b = compute_psme(&gt, &alg, 100, &hi, &margin).unwrap().value;
            prop_assert!(b >= a);
        }

        #[test]
        fn zero_psme_means_exact_hits(
            gt in prop::collection::vec(0u32..100, 1..6),
            alg in prop::collection::vec(0u32..100, 0..6),
        ) {
            let gt: Vec<f64> = gt.into_iter().map(f64::from).collect();
            let alg: Vec<f64> = alg.into_iter().map(f64::from).collect();
            let margin = MarginConfig::new(5.0).unwrap();
            let cfg = PsmeConfig::default();
            let v = compute_psme(&gt, &alg, 100, &cfg, &margin).unwrap().value;
            if v == 0.0 {
                prop_assert!(alg.iter().all(|s| gt.contains(s)));
                let c = classify_margin(&gt, &alg, 100, &margin).unwrap();
                prop_assert_eq!(c.false_positives + c.false_negatives, 0.0);
            }
        }
    }
}
