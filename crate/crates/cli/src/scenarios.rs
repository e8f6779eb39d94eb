// SPDX-License-Identifier: MIT OR Apache-2.0

//! Side-by-side F1 scores of the three counting approaches on the
//! hand-built scenarios.

use serde::Serialize;

use segeval_core::classifiers::{classify_conventional, classify_ink, classify_margin};
use segeval_core::synthgen::make_scenarios;
use segeval_core::{compute_measures, KernelConfig, MarginConfig, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub scenario: char,
    pub gt_points: Vec<f64>,
    pub alg_points: Vec<f64>,
    pub f1: f64,
    pub f1_margin: f64,
    pub f1_ink: f64,
    pub reconstructed: bool,
}

pub fn scenario_rows(margin: &MarginConfig, kernel: &KernelConfig) -> Result<Vec<ScenarioRow>> {
    make_scenarios()
        .into_iter()
        .map(|s| {
            let conv = classify_conventional(&s.gt_points, &s.alg_points, s.f_max)?;
            let marg = classify_margin(&s.gt_points, &s.alg_points, s.f_max, margin)?;
            let ink = classify_ink(&s.gt_points, &s.alg_points, s.f_max, kernel)?;
            Ok(ScenarioRow {
                scenario: s.id,
                f1: compute_measures(&conv).f1,
                f1_margin: compute_measures(&marg).f1,
                f1_ink: compute_measures(&ink).f1,
                gt_points: s.gt_points,
                alg_points: s.alg_points,
                reconstructed: s.reconstructed,
            })
        })
        .collect()
}

fn join(points: &[f64]) -> String {
    points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn to_text(rows: &[ScenarioRow]) -> String {
    let mut out = format!(
        "{:<9} {:>6} {:>6} {:>6}  {:<14} {}\n",
        "scenario", "F1", "F1^M", "F1^InK", "algorithm", "note"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<9} {:>6.2} {:>6.2} {:>6.2}  {:<14} {}\n",
            r.scenario,
            r.f1,
            r.f1_margin,
            r.f1_ink,
            join(&r.alg_points),
            if r.reconstructed { "reconstructed" } else { "" }
        ));
    }
    out
}

pub fn to_csv(rows: &[ScenarioRow]) -> String {
    let mut out = String::from("scenario,f1,f1_margin,f1_ink,gt_points,alg_points,reconstructed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scenario,
            r.f1,
            r.f1_margin,
            r.f1_ink,
            join(&r.gt_points),
            join(&r.alg_points),
            r.reconstructed
        ));
    }
    out
}
