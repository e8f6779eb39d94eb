// SPDX-License-Identifier: MIT OR Apache-2.0

//! Runs a baseline segmenter as a protocol client against `segeval serve`.

use clap::{Parser, ValueEnum};
use segeval_cli::error::{Classify, CliError, CliResult, EXIT_INPUT, EXIT_OK};
use segeval_core::baselines::{Algorithm, BaselineParams};
use segeval_core::pipeline::{Approach, DataAccess};
use segeval_core::Granularity;
use segeval_protocol::message::{ParamSpec, ParamType};
use segeval_protocol::Client;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Full,
    FrameByFrame,
}

#[derive(Debug, Parser)]
#[command(name = "segeval-baseline", version, about = "Baseline segmenter protocol client")]
struct Args {
    /// Server address
    #[arg(long, value_name = "HOST:PORT")]
    connect: String,
    /// Baseline algorithm: zvc, ssav or pca
    #[arg(long)]
    algo: String,
    /// Parameter overrides as a JSON object
    #[arg(long, value_name = "JSON")]
    params: Option<String>,
    /// How recordings are fetched
    #[arg(long, value_enum, default_value = "full")]
    mode: Mode,
    /// Only segment these recordings (default: all)
    #[arg(long)]
    recording: Vec<String>,
}

fn param_specs(params: &BaselineParams) -> Vec<ParamSpec> {
    params
        .to_map()
        .into_iter()
        .map(|(name, default)| {
            let kind = match &default {
                serde_json::Value::Bool(_) => ParamType::Bool,
                serde_json::Value::Number(n) if n.is_u64() || n.is_i64() => ParamType::Int,
                serde_json::Value::Number(_) => ParamType::Float,
                _ => ParamType::String,
            };
            ParamSpec {
                name,
                kind,
                default,
                min: None,
                max: None,
            }
        })
        .collect()
}

fn run(args: Args) -> CliResult<()> {
    let algo: Algorithm = args.algo.parse()?;
    let overrides = match &args.params {
        Some(text) => serde_json::from_str(text).input("--params is not valid JSON")?,
        None => serde_json::Value::Object(Default::default()),
    };
    let local = BaselineParams::with_overrides(algo, &overrides)?;
    let mode = match args.mode {
        Mode::Full => DataAccess::Full,
        Mode::FrameByFrame => DataAccess::FrameByFrame,
    };

    let mut client = Client::connect(args.connect.as_str(), algo.as_str(), false)
        .internal(format!("cannot connect to {}", args.connect))?;
    let assigned = client
        .declare_params(param_specs(&local))
        .internal("parameter negotiation failed")?;
    let params = BaselineParams::with_overrides(algo, &serde_json::to_value(&assigned).internal("params")?)?;

    let names = if args.recording.is_empty() {
        client.recordings().to_vec()
    } else {
        args.recording.clone()
    };
    for name in names {
        let rec = client
            .request_recording(&name, mode, |_, _| {})
            .internal(format!("fetching {name}"))?;
        let seg = params.segment(&rec)?;
        let report = client
            .report(&name, seg.points().to_vec())
            .internal(format!("reporting {name}"))?;
        let f1 = report.cell(Granularity::Fine, Approach::Margin).measures.f1;
        println!("{name}: {} points, fine F1^M {f1:.2}", seg.points().len());
    }
    client.bye().map_err(|e| CliError::Internal(e.into()))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(args) {
        eprintln!("segeval-baseline: {e}");
        std::process::exit(e.exit_code());
    }
}
