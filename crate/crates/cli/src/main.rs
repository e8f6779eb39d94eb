// SPDX-License-Identifier: MIT OR Apache-2.0

use clap::Parser;
use segeval_cli::error::{EXIT_INPUT, EXIT_OK};
use segeval_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("segeval: {e}");
        std::process::exit(e.exit_code());
    }
}
