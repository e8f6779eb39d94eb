// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use segeval_core::baselines::{Algorithm, BaselineParams};
use segeval_core::dataset::Dataset;
use segeval_core::pipeline::{
    aggregate, cascade, evaluate_recording, make_folds, EvalConfig, EvaluationReport, Provenance,
    RunContext, CSV_HEADER, NUM_FOLDS,
};
use segeval_core::synthgen::{demo_dataset_spec, make_dataset, GeneratorInput};
use segeval_core::{
    sample_error_function, Granularity, GroundTruth, Kernel, KernelConfig, MarginConfig, Recording,
    SegmentationResult,
};
use segeval_protocol::ServerEnv;

use crate::error::{Classify, CliError, CliResult};
use crate::scenarios::{scenario_rows, to_csv, to_text};
use crate::{
    EvaluateArgs, Format, GenerateArgs, GlobalArgs, ReportArgs, RunArgs, ScenariosArgs, ServeArgs,
};

fn write_out(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).internal(format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(path, contents).internal(format!("cannot write {}", path.display()))
}

fn emit(out: Option<&Path>, contents: &str) -> CliResult<()> {
    match out {
        Some(path) => write_out(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn report_text(report: &EvaluationReport, format: Format) -> CliResult<String> {
    match format {
        Format::Csv => Ok(report.to_csv()),
        Format::Json => Ok(report.to_json()? + "\n"),
        Format::Text => Ok(report_table(report)),
    }
}

/// Human-readable grid of F1 and MCC per granularity and approach.
pub fn report_table(report: &EvaluationReport) -> String {
    let mut out = format!("{} ({} frames)\n", report.recording, report.f_max);
    let _ = writeln!(
        out,
        "{:<8} {:<13} {:>6} {:>6} {:>6} {:>6} {:>9}",
        "level", "approach", "prec", "rec", "F1", "MCC", "PSME"
    );
    for (g, row) in &report.cells {
        for (a, cell) in row {
            let m = &cell.measures;
            let _ = writeln!(
                out,
                "{:<8} {:<13} {:>6.2} {:>6.2} {:>6.2} {:>6.2} {:>9.2}",
                g.as_str(),
                a.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.mcc,
                report.psme[g]
            );
        }
    }
    out
}

pub fn evaluate(global: &GlobalArgs, args: &EvaluateArgs) -> CliResult<()> {
    let cfg = global.eval_config()?;
    let rec = Recording::load(&args.recording)
        .input(format!("cannot load recording {}", args.recording.display()))?;
    let gt = GroundTruth::load(&args.ground_truth)
        .input(format!("cannot load ground truth {}", args.ground_truth.display()))?;
    let seg = SegmentationResult::load(&args.segmentation)
        .input(format!("cannot load segmentation {}", args.segmentation.display()))?;

    let ctx = RunContext::new(
        args.dataset_version.clone(),
        Provenance::new(args.algorithm.clone()).stamped(),
    );
    let report = evaluate_recording(&rec, &gt, &seg, &cfg, &ctx)?;

    if let Some(path) = &args.emit_plotdata {
        write_plotdata(path, &rec, &gt, &seg, &cfg, args.plot_step)?;
    }

    let format = global.format.unwrap_or(Format::Json);
    let text = report_text(&report, format)?;
    match &global.out {
        Some(dir) => {
            let ext = match format {
                Format::Json => "json",
                Format::Csv => "csv",
                Format::Text => "txt",
            };
            write_out(&dir.join(format!("{}.report.{ext}", report.recording)), &text)
        }
        None => emit(None, &text),
    }
}

fn write_plotdata(
    path: &Path,
    rec: &Recording,
    gt: &GroundTruth,
    seg: &SegmentationResult,
    cfg: &EvalConfig,
    step: f64,
) -> CliResult<()> {
    if cfg.kernel != Kernel::Gaussian {
        return Err(CliError::input("--emit-plotdata needs the gaussian kernel"));
    }
    let resolved = cfg.resolve(rec.frame_rate_hz())?;
    let fine = cascade(gt).level(Granularity::Fine).to_vec();
    let samples = sample_error_function(
        &fine,
        seg.points(),
        &resolved.kernel,
        (0.0, rec.f_max() as f64),
        step,
    )?;
    let mut out = String::from("t,f_s,f_gt,e_c\n");
    for s in samples {
        let _ = writeln!(out, "{},{},{},{}", s.t, s.f_s, s.f_gt, s.e_c);
    }
    write_out(path, &out)
}

pub fn scenarios(global: &GlobalArgs, args: &ScenariosArgs) -> CliResult<()> {
    let margin = MarginConfig {
        inclusive: !global.strict_margin,
        ..MarginConfig::new(args.margin_frames)?
    };
    let kernel = match global.kernel.map(Kernel::from) {
        Some(Kernel::Dirac) => KernelConfig::dirac(),
        _ => KernelConfig::gaussian(args.sigma_frames)?,
    };
    let rows = scenario_rows(&margin, &kernel)?;
    let text = match global.format.unwrap_or(Format::Text) {
        Format::Text => to_text(&rows),
        Format::Csv => to_csv(&rows),
        Format::Json => serde_json::to_string_pretty(&rows).internal("serialising scenarios")? + "\n",
    };
    emit(global.out.as_deref(), &text)
}

pub fn generate(global: &GlobalArgs, args: &GenerateArgs) -> CliResult<()> {
    let out = global
        .out
        .as_deref()
        .ok_or_else(|| CliError::input("generate needs --out <dir>"))?;
    let spec = match (&args.spec, args.demo) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .input(format!("cannot read {}", path.display()))?;
            serde_json::from_str::<GeneratorInput>(&text)
                .input(format!("{} is not a generator spec", path.display()))?
                .into_dataset_spec()
        }
        (None, Some(n)) => demo_dataset_spec(n, args.seed),
        (None, None) => return Err(CliError::input("generate needs --spec <file> or --demo <n>")),
    };
    let dataset = make_dataset(&spec)?;
    dataset.save(out)?;
    info!("wrote {} recordings to {}", dataset.entries.len(), out.display());
    Ok(())
}

/// Runs `params` over every recording and evaluates the results. Reports
/// come back in recording-name order.
pub fn run_baseline(
    dataset: &Dataset,
    params: &BaselineParams,
    cfg: &EvalConfig,
) -> segeval_core::Result<Vec<EvaluationReport>> {
    let mut prov = Provenance::new(params.algorithm().as_str());
    prov.algorithm_params = params.to_map();
    let ctx = RunContext::new(dataset.version.clone(), prov.stamped());
    dataset
        .entries
        .par_iter()
        .map(|e| {
            let seg = params.segment(&e.recording)?;
            evaluate_recording(&e.recording, &e.ground_truth, &seg, cfg, &ctx)
        })
        .collect()
}

pub fn run(global: &GlobalArgs, args: &RunArgs) -> CliResult<()> {
    let cfg = global.eval_config()?;
    let algo: Algorithm = args.algo.parse()?;
    let overrides = match &args.params {
        Some(text) => serde_json::from_str(text).input("--params is not valid JSON")?,
        None => serde_json::Value::Object(Default::default()),
    };
    let params = BaselineParams::with_overrides(algo, &overrides)?;
    let dataset = Dataset::load(&args.data)
        .input(format!("cannot load dataset {}", args.data.display()))?;
    if dataset.entries.is_empty() {
        return Err(CliError::input(format!("dataset {} is empty", args.data.display())));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .internal("cannot start worker threads")?;
    let reports = pool.install(|| run_baseline(&dataset, &params, &cfg))?;
    let summary = aggregate(&reports)?;

    let out_dir = global.out.clone().unwrap_or_else(|| PathBuf::from("reports"));
    let format = global.format.unwrap_or(Format::Json);
    for r in &reports {
        write_out(
            &out_dir.join(format!("{}.report.json", r.recording)),
            &(r.to_json()? + "\n"),
        )?;
        if format == Format::Csv {
            write_out(&out_dir.join(format!("{}.report.csv", r.recording)), &r.to_csv())?;
        }
    }
    let summary_json = serde_json::to_string_pretty(&summary).internal("serialising summary")?;
    write_out(&out_dir.join("summary.json"), &(summary_json + "\n"))?;
    if format == Format::Csv {
        write_out(&out_dir.join("summary.csv"), &summary.to_csv())?;
    }
    if dataset.entries.len() >= NUM_FOLDS {
        let folds = make_folds(&dataset.names())?;
        let map: BTreeMap<&str, usize> = folds.iter().collect();
        let text = serde_json::to_string_pretty(&map).internal("serialising folds")?;
        write_out(&out_dir.join("folds.json"), &(text + "\n"))?;
    }

    for r in &reports {
        let f1 = |g| {
            r.cells[&g]
                .get(&segeval_core::pipeline::Approach::Margin)
                .map_or(f64::NAN, |c| c.measures.f1)
        };
        println!(
            "{:<24} F1^M rough {:.2} medium {:.2} fine {:.2}",
            r.recording,
            f1(Granularity::Rough),
            f1(Granularity::Medium),
            f1(Granularity::Fine)
        );
    }
    println!("{} reports written to {}", reports.len(), out_dir.display());
    Ok(())
}

pub fn serve(global: &GlobalArgs, args: &ServeArgs) -> CliResult<()> {
    let eval = global.eval_config()?;
    let dataset = Dataset::load(&args.data)
        .input(format!("cannot load dataset {}", args.data.display()))?;
    if let Some(dir) = &args.reports {
        std::fs::create_dir_all(dir).internal(format!("cannot create {}", dir.display()))?;
    }
    let env = ServerEnv {
        dataset,
        eval,
        reports_dir: args.reports.clone(),
        param_overrides: BTreeMap::new(),
    };
    let handle = segeval_protocol::spawn(args.bind.as_str(), env)
        .input(format!("cannot listen on {}", args.bind))?;
    println!("listening on {}", handle.local_addr());
    handle.join();
    Ok(())
}

pub fn report(global: &GlobalArgs, args: &ReportArgs) -> CliResult<()> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for path in &args.reports {
        let text =
            std::fs::read_to_string(path).input(format!("cannot read {}", path.display()))?;
        let report = EvaluationReport::from_json(&text)
            .input(format!("{} is not an evaluation report", path.display()))?;
        for row in report.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    emit(global.out.as_deref(), &out)
}
