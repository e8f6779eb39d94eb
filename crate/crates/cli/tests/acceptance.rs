// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use segeval_cli::commands::run_baseline;
use segeval_core::baselines::{
    pca::{pca_segment, PcaParams},
    ssav::{squared_velocity_sum, ssav_segment, SsavParams},
    zvc::{zvc_segment, ZvcParams},
    Algorithm, BaselineParams,
};
use segeval_core::classifiers::{classify_conventional, classify_ink, classify_margin};
use segeval_core::pipeline::{aggregate, make_folds, Approach, DataAccess, EvalConfig, EvaluationReport};
use segeval_core::synthgen::{demo_dataset_spec, make_dataset};
use segeval_core::{
    compute_measures, compute_psme, ConfusionCounts, Granularity, KernelConfig, MarginConfig,
    PsmeConfig, Recording,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn segeval() -> Command {
    Command::new(env!("CARGO_BIN_EXE_segeval"))
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn table_one_rows() -> Outcome {
    let start = Instant::now();
    let out = segeval()
        .args(["scenarios", "--format", "json"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(out.status.success(), "scenarios command failed")?;
    let rows: Vec<serde_json::Value> =
        serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let row = |id: &str| {
        rows.iter()
            .find(|r| r["scenario"] == id)
            .map(|r| {
                (
                    r["f1"].as_f64().unwrap(),
                    r["f1_margin"].as_f64().unwrap(),
                    r["f1_ink"].as_f64().unwrap(),
                )
            })
            .ok_or(format!("row {id} missing"))
    };
    // (expected F1, F1^M, F1^InK, tolerance on F1^InK)
    let expected = [("a", 1.0, 1.0, 1.0, 0.005), ("b", 0.0, 1.0, 0.76, 0.01), ("g", 0.0, 0.0, 0.0, 0.005)];
    let mut summary = Vec::new();
    for (id, f1, f1m, f1k, tol) in expected {
        let (a, m, k) = row(id)?;
        check(
            round2(a) == f1 && round2(m) == f1m && (k - f1k).abs() <= tol,
            format!("row {id}: got ({a:.3}, {m:.3}, {k:.4})"),
        )?;
        summary.push(format!("{id}=({a:.2},{m:.2},{k:.3})"));
    }
    check(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("{} in {elapsed:.0?}", summary.join(" ")))
}

fn measure_fixtures() -> Outcome {
    let cases = [
        ("over-segmenting counts", (9.0, 2600.0, 174.0, 0.0), [0.05, 1.00, 0.94, 0.09, 0.97, 0.21]),
        ("mixed-error counts", (6.0, 2705.0, 69.0, 3.0), [0.08, 0.67, 0.97, 0.14, 0.99, 0.23]),
    ];
    for (name, (tp, tn, fp, fn_), want) in cases {
        let counts = ConfusionCounts {
            true_positives: tp,
            true_negatives: tn,
            false_positives: fp,
            false_negatives: fn_,
            f_max: (tp + tn + fp + fn_) as u64,
        };
        let got = compute_measures(&counts).as_array().map(round2);
        check(got == want, format!("{name}: got {got:?}, want {want:?}"))?;
    }
    Ok("both count sets reproduce all six measures".into())
}

fn ink_analytic_oracle() -> Outcome {
    let start = Instant::now();
    let phi = Normal::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for sigma in [1.0, 1.67, 6.667] {
        let cfg = KernelConfig::gaussian(sigma).map_err(|e| e.to_string())?;
        for k in [0.0, 0.5, 1.0, 2.0, 3.0, 5.0] {
            let d = k * sigma;
            let c = classify_ink(&[100.0], &[100.0 + d], 300, &cfg).map_err(|e| e.to_string())?;
            let want = 2.0 * phi.cdf(-d / (2.0 * sigma));
            worst = worst.max((c.true_positives - want).abs());
        }
    }
    let elapsed = start.elapsed();
    check(worst <= 1e-3, format!("max deviation {worst:.2e}"))?;
    check(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("max |A_tp - 2Phi(-d/2s)| = {worst:.1e} in {elapsed:.0?}"))
}

fn random_points(rng: &mut ChaCha8Rng, max_count: usize, f_max: u64, integer: bool) -> Vec<f64> {
    let n = rng.gen_range(0..max_count);
    let mut pts: Vec<f64> = Vec::new();
    while pts.len() < n {
        let p = if integer {
            rng.gen_range(0..f_max) as f64
        } else {
            rng.gen_range(0.0..(f_max - 1) as f64)
        };
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_ink: f64 = 0.0;
    for i in 0..1000 {
        let f_max = rng.gen_range(20..400u64);
        let cap = (f_max / 4) as usize;
        let integer = i % 2 == 0;
        let gt = random_points(&mut rng, cap.min(12), f_max, integer);
        let alg = random_points(&mut rng, cap.min(12), f_max, integer);
        let margin = MarginConfig::new(rng.gen_range(0.5..10.0)).unwrap();
        let kernel = KernelConfig::gaussian(rng.gen_range(0.3..5.0)).unwrap();
        let fm = f_max as f64;
        let conv = classify_conventional(&gt, &alg, f_max).map_err(|e| e.to_string())?;
        let marg = classify_margin(&gt, &alg, f_max, &margin).map_err(|e| e.to_string())?;
        let ink = classify_ink(&gt, &alg, f_max, &kernel).map_err(|e| e.to_string())?;
        check(conv.total() == fm, format!("instance {i}: conventional sums to {}", conv.total()))?;
        check(marg.total() == fm, format!("instance {i}: margin sums to {}", marg.total()))?;
        worst_ink = worst_ink.max((ink.total() - fm).abs());
    }
    check(worst_ink <= 1e-6, format!("InK total off by {worst_ink:.2e}"))?;
    Ok(format!("1000 instances, worst InK deviation {worst_ink:.1e}"))
}

fn dirac_limit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let kernel = KernelConfig::gaussian(0.01).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let f_max = rng.gen_range(10..300u64);
        let cap = (f_max / 3) as usize;
        let gt = random_points(&mut rng, cap.min(15), f_max, true);
        let alg = random_points(&mut rng, cap.min(15), f_max, true);
        let conv = classify_conventional(&gt, &alg, f_max).map_err(|e| e.to_string())?;
        let ink = classify_ink(&gt, &alg, f_max, &kernel).map_err(|e| e.to_string())?;
        for (a, b) in [
            (conv.true_positives, ink.true_positives),
            (conv.true_negatives, ink.true_negatives),
            (conv.false_positives, ink.false_positives),
            (conv.false_negatives, ink.false_negatives),
        ] {
            worst = worst.max((a - b).abs());
        }
        check(worst <= 1e-3, format!("instance {i}: deviation {worst:.2e}"))?;
    }
    Ok(format!("200 instances, max per-count deviation {worst:.1e}"))
}

fn margin_shift() -> Outcome {
    let gt = [20.0, 50.0, 80.0];
    let margin = MarginConfig::new(5.0).unwrap();
    let f1_at = |shift: f64| -> Result<f64, String> {
        let alg: Vec<f64> = gt.iter().map(|g| g + shift).collect();
        let c = classify_margin(&gt, &alg, 100, &margin).map_err(|e| e.to_string())?;
        Ok(compute_measures(&c).f1)
    };
    let (at, past) = (f1_at(5.0)?, f1_at(6.0)?);
    check(at == 1.0 && past == 0.0, format!("F1^M at margin {at}, at margin+1 {past}"))?;

    // same behaviour through the millisecond configuration: 200 ms at 100 Hz
    let frames: Vec<Vec<f64>> = vec![vec![0.0]; 300];
    let rec = Recording::new("shift", 100.0, vec!["q".into()], frames).unwrap();
    let gt_pts = [50.0, 150.0, 250.0];
    let ground = segeval_core::GroundTruth::new(
        "shift",
        gt_pts
            .iter()
            .map(|&f| segeval_core::LabelledPoint { frame: f, granularity: Granularity::Rough })
            .collect(),
    )
    .unwrap();
    let cfg = EvalConfig::default();
    let ctx = segeval_core::pipeline::RunContext::new("v", segeval_core::pipeline::Provenance::new("shift"));
    for (shift, want) in [(20.0, 1.0), (21.0, 0.0)] {
        let pts: Vec<f64> = gt_pts.iter().map(|g| g + shift).collect();
        let seg = segeval_core::SegmentationResult::new("shift", &pts);
        let report = segeval_core::pipeline::evaluate_recording(&rec, &ground, &seg, &cfg, &ctx)
            .map_err(|e| e.to_string())?;
        let f1 = report.cell(Granularity::Fine, Approach::Margin).measures.f1;
        check(f1 == want, format!("200 ms margin, shift {shift} frames: F1^M {f1}"))?;
    }
    Ok("shift = margin gives 1.00, margin + 1 gives 0.00".into())
}

fn single_channel(name: &str, q: Vec<f64>) -> Recording {
    Recording::new(name, 100.0, vec!["q".into()], q.into_iter().map(|v| vec![v]).collect()).unwrap()
}

fn baseline_properties() -> Outcome {
    use std::f64::consts::PI;

    // ZVC: extrema of sin(2 pi t / 100) at 25, 75, 125, 175
    let sine = single_channel("sine", (0..200).map(|t| (2.0 * PI * t as f64 / 100.0).sin()).collect());
    let zvc = zvc_segment(&sine, &ZvcParams::default()).map_err(|e| e.to_string())?;
    let expected = [25.0, 75.0, 125.0, 175.0];
    check(
        zvc.points().len() == 4 && zvc.points().iter().zip(expected).all(|(p, e)| (p - e).abs() <= 2.0),
        format!("ZVC points {:?}", zvc.points()),
    )?;

    // SSAV: a single velocity dip to 0.5 units/s at frame 150
    let mut q = 0.0;
    let dip: Vec<f64> = (0..300)
        .map(|t| {
            let d = (t as f64 - 150.0) / 8.0;
            q += (2.0 - 1.5 * (-0.5 * d * d).exp()) / 100.0;
            q
        })
        .collect();
    let dip = single_channel("dip", dip);
    let params = SsavParams { window: 41, threshold_t: 1.0, noise_threshold: 0.01 };
    let ssav = ssav_segment(&dip, &params).map_err(|e| e.to_string())?;
    let s = squared_velocity_sum(&dip);
    let argmin = (0..s.len()).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap() as f64;
    check(
        ssav.points().len() == 1 && (ssav.points()[0] - argmin).abs() <= 1.0,
        format!("SSAV points {:?}, argmin {argmin}", ssav.points()),
    )?;

    // PCA: activity moves from channel a to channel b at frame 100
    let frames = (0..200)
        .map(|t| {
            let t = t as f64;
            if t < 100.0 {
                vec![(2.0 * PI * t / 40.0).sin(), 0.0]
            } else {
                vec![0.0, (2.0 * PI * (t - 100.0) / 40.0).sin()]
            }
        })
        .collect();
    let switch = Recording::new("switch", 100.0, vec!["a".into(), "b".into()], frames).unwrap();
    let pca = pca_segment(&switch, &PcaParams::default()).map_err(|e| e.to_string())?;
    check(
        pca.points().len() == 1 && (pca.points()[0] - 100.0).abs() <= 30.0,
        format!("PCA points {:?}", pca.points()),
    )?;

    // ZVC over-segments: fine-level precision beats rough-level precision
    let dataset = make_dataset(&demo_dataset_spec(6, 5)).map_err(|e| e.to_string())?;
    let reports = run_baseline(&dataset, &BaselineParams::defaults(Algorithm::Zvc), &EvalConfig::default())
        .map_err(|e| e.to_string())?;
    let summary = aggregate(&reports).map_err(|e| e.to_string())?;
    let precision = |g| summary.pooled[&g][&Approach::Margin].measures.precision;
    let (fine, rough) = (precision(Granularity::Fine), precision(Granularity::Rough));
    check(fine > rough, format!("ZVC precision fine {fine:.3} <= rough {rough:.3}"))?;

    Ok(format!(
        "ZVC {:?}, SSAV {:?}, PCA {:?}, ZVC precision fine {fine:.2} > rough {rough:.2}",
        zvc.points().iter().map(|p| p.round()).collect::<Vec<_>>(),
        ssav.points(),
        pca.points()
    ))
}

fn report_without_timestamp(path: &Path) -> Result<EvaluationReport, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    EvaluationReport::from_json(&text)
        .map(|r| r.without_timestamp())
        .map_err(|e| e.to_string())
}

fn pipeline_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("data");
    let status = segeval()
        .args(["generate", "--demo", "7", "--seed", "9", "--out"])
        .arg(&data)
        .output()
        .map_err(|e| e.to_string())?
        .status;
    check(status.success(), "generate failed")?;

    let mut runs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}"));
        let status = segeval()
            .args(["run", "--algo", "ssav", "--data"])
            .arg(&data)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        check(status.success(), format!("run {i} failed"))?;
        runs.push(out);
    }

    let mut names: Vec<String> = std::fs::read_dir(&runs[0])
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let reports: Vec<&String> = names.iter().filter(|n| n.ends_with(".report.json")).collect();
    check(reports.len() == 7, format!("expected 7 reports, found {}", reports.len()))?;
    for name in &reports {
        let a = report_without_timestamp(&runs[0].join(name))?;
        let b = report_without_timestamp(&runs[1].join(name))?;
        check(a == b, format!("{name} differs between runs"))?;
    }
    for name in ["summary.json", "folds.json"] {
        let a = std::fs::read(runs[0].join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(runs[1].join(name)).map_err(|e| e.to_string())?;
        check(a == b, format!("{name} differs between runs"))?;
    }

    // fold assignment ignores input order
    let base: Vec<String> = (0..23).map(|i| format!("rec_{i:02}")).collect();
    let reference: BTreeMap<String, usize> = make_folds(&base)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|(n, f)| (n.to_owned(), f))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let mut shuffled = base.clone();
        shuffled.shuffle(&mut rng);
        let folds: BTreeMap<String, usize> = make_folds(&shuffled)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|(n, f)| (n.to_owned(), f))
            .collect();
        check(folds == reference, "fold assignment depends on input order")?;
    }
    Ok("7 reports identical modulo timestamp; folds stable over 50 permutations".into())
}

fn psme_fixtures() -> Outcome {
    let p = PsmeConfig::default();
    let margin = MarginConfig::new(5.0).unwrap();
    let mut got = Vec::new();
    for (alg, want) in [(10.0, 0.0), (13.0, 9.0), (40.0, 1100.0)] {
        let v = compute_psme(&[10.0], &[alg], 100, &p, &margin)
            .map_err(|e| e.to_string())?
            .value;
        check(v == want, format!("alg at {alg}: PSME {v}, want {want}"))?;
        got.push(v);
    }
    Ok(format!("{got:?}"))
}

fn protocol_round_trip() -> Outcome {
    use segeval_protocol::{spawn, Client, ServerEnv};
    let dataset = make_dataset(&demo_dataset_spec(2, 4)).map_err(|e| e.to_string())?;
    let env = ServerEnv {
        dataset: dataset.clone(),
        eval: EvalConfig::default(),
        reports_dir: None,
        param_overrides: BTreeMap::new(),
    };
    let server = spawn("127.0.0.1:0", env).map_err(|e| e.to_string())?;
    let mut client = Client::connect(server.local_addr(), "zvc", false).map_err(|e| e.to_string())?;
    let entry = &dataset.entries[0];
    let mut frames = 0u64;
    let mut in_order = true;
    let rec = client
        .request_recording(entry.recording.name(), DataAccess::FrameByFrame, |start, block| {
            in_order &= start == frames;
            frames += block.len() as u64;
        })
        .map_err(|e| e.to_string())?;
    check(in_order && frames == rec.f_max(), format!("{frames} frames, in order {in_order}"))?;
    let points = vec![3.0, 40.5, 77.0];
    let online = client.report(rec.name(), points.clone()).map_err(|e| e.to_string())?;
    server.shutdown();

    let seg = segeval_core::SegmentationResult::new(rec.name(), &points);
    let mut prov = segeval_core::pipeline::Provenance::new("zvc");
    prov.data_access = DataAccess::FrameByFrame;
    let ctx = segeval_core::pipeline::RunContext::new(dataset.version.clone(), prov);
    let offline = segeval_core::pipeline::evaluate_recording(
        &entry.recording,
        &entry.ground_truth,
        &seg,
        &EvalConfig::default(),
        &ctx,
    )
    .map_err(|e| e.to_string())?;
    check(online.cells == offline.cells, "cells differ from offline evaluation")?;
    check(online.psme == offline.psme, "PSME differs from offline evaluation")?;
    Ok(format!("{frames} frames in order; report equals offline evaluation"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("scenario table rows a, b, g", table_one_rows),
        ("measure formula fixtures", measure_fixtures),
        ("InK analytic single-pair oracle", ink_analytic_oracle),
        ("count conservation (1000 instances)", conservation),
        ("Dirac limit equals conventional (200 instances)", dirac_limit),
        ("margin shift boundary", margin_shift),
        ("baseline properties and ZVC granularity ordering", baseline_properties),
        ("pipeline determinism and fold invariance", pipeline_determinism),
        ("PSME fixtures 0 / 9 / 1100", psme_fixtures),
        ("[secondary] protocol round trip", protocol_round_trip),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
