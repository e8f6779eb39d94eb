// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `segeval` command-line tool.

pub mod commands;
pub mod error;
pub mod scenarios;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use segeval_core::pipeline::EvalConfig;
use segeval_core::Kernel;

use crate::error::{Classify, CliResult};

#[derive(Debug, Parser)]
#[command(name = "segeval", version, about = "Evaluate motion segmentation results")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Dirac,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => Kernel::Gaussian,
            KernelArg::Dirac => Kernel::Dirac,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Debug, Default, Args)]
pub struct GlobalArgs {
    /// Margin half-width in milliseconds [default: 200]
    #[arg(long, global = true)]
    pub margin_ms: Option<f64>,
    /// Gaussian kernel standard deviation in milliseconds [default: 66.67]
    #[arg(long, global = true)]
    pub sigma_ms: Option<f64>,
    /// PSME penalty per false positive or false negative, in frames² [default: 100]
    #[arg(long, global = true)]
    pub psme_p: Option<f64>,
    /// Kernel used by the integrated-kernel approach [default: gaussian]
    #[arg(long, global = true, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Use a strict margin comparison (|s - g| < margin)
    #[arg(long, global = true)]
    pub strict_margin: bool,
    /// Start from the configuration stored in a config or report JSON file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file or directory (depends on the command)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

impl GlobalArgs {
    /// Evaluation settings: the `--config` file (or defaults) overridden by
    /// any explicit flags.
    pub fn eval_config(&self) -> CliResult<EvalConfig> {
        let mut cfg = match &self.config {
            None => EvalConfig::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .input(format!("cannot read {}", path.display()))?;
                let value: serde_json::Value =
                    serde_json::from_str(&text).input(format!("{} is not JSON", path.display()))?;
                let inner = value.get("config").cloned().unwrap_or(value);
                serde_json::from_value(inner)
                    .input(format!("{} holds no evaluation config", path.display()))?
            }
        };
        if let Some(v) = self.margin_ms {
            cfg.margin_ms = v;
        }
        if let Some(v) = self.sigma_ms {
            cfg.sigma_ms = v;
        }
        if let Some(v) = self.psme_p {
            cfg.psme_p = v;
        }
        if let Some(k) = self.kernel {
            cfg.kernel = k.into();
        }
        if self.strict_margin {
            cfg.strict_margin = true;
        }
        // surface bad values before any work starts
        cfg.resolve(100.0)?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one segmentation against its ground truth
    Evaluate(EvaluateArgs),
    /// Print F1 scores of the three approaches on the built-in scenarios
    Scenarios(ScenariosArgs),
    /// Write a synthetic dataset
    Generate(GenerateArgs),
    /// Run a baseline segmenter over a dataset and evaluate it
    Run(RunArgs),
    /// Serve a dataset to external algorithms over TCP
    Serve(ServeArgs),
    /// Convert JSON reports to CSV
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Recording file (.json or .csv)
    #[arg(long)]
    pub recording: PathBuf,
    /// Ground-truth JSON file
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// Segmentation result JSON file
    #[arg(long)]
    pub segmentation: PathBuf,
    /// Algorithm name recorded in the report
    #[arg(long, default_value = "external")]
    pub algorithm: String,
    /// Dataset version recorded in the report
    #[arg(long, default_value = segeval_core::dataset::UNVERSIONED)]
    pub dataset_version: String,
    /// Also write the sampled kernel error function as CSV (t,f_s,f_gt,e_c)
    #[arg(long, value_name = "FILE")]
    pub emit_plotdata: Option<PathBuf>,
    /// Sampling step of the plot data in frames
    #[arg(long, default_value_t = 0.1)]
    pub plot_step: f64,
}

#[derive(Debug, Args)]
pub struct ScenariosArgs {
    /// Margin half-width in frames
    #[arg(long, default_value_t = 5.0)]
    pub margin_frames: f64,
    /// Gaussian kernel standard deviation in frames
    #[arg(long, default_value_t = 1.67)]
    pub sigma_frames: f64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator spec (one recording or a whole dataset) as JSON
    #[arg(long, conflicts_with = "demo")]
    pub spec: Option<PathBuf>,
    /// Generate the built-in demo dataset with this many recordings
    #[arg(long)]
    pub demo: Option<usize>,
    /// Seed for the demo dataset
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Baseline algorithm: zvc, ssav or pca
    #[arg(long)]
    pub algo: String,
    /// Dataset directory
    #[arg(long)]
    pub data: PathBuf,
    /// Parameter overrides as a JSON object
    #[arg(long, value_name = "JSON")]
    pub params: Option<String>,
    /// Number of worker threads (0 = one per core)
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Address to listen on
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub bind: String,
    /// Dataset directory
    #[arg(long)]
    pub data: PathBuf,
    /// Directory receiving one JSON report per evaluated recording
    #[arg(long)]
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON files
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Evaluate(a) => commands::evaluate(&cli.global, a),
        Command::Scenarios(a) => commands::scenarios(&cli.global, a),
        Command::Generate(a) => commands::generate(&cli.global, a),
        Command::Run(a) => commands::run(&cli.global, a),
        Command::Serve(a) => commands::serve(&cli.global, a),
        Command::Report(a) => commands::report(&cli.global, a),
    }
}
