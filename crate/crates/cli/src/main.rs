// Copyright 2026 The ragetn Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License.You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ragetn_cli::config::ExperimentConfig;
use ragetn_cli::experiments;
use ragetn_cli::params::{param_count, CountMode, ParamSpec};
use ragetn_cli::selftest;

/// Graph-enhanced tensor-network experiments.
#[derive(Parser)]
#[command(name = "ragetn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Run the quick oracle checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Count parameters of an ansatz such as `rage-tts-flat:n=16,d=4`.
    ParamCount {
        spec: String,
        /// mixed, complex or real.
        #[arg(long, default_value = "mixed")]
        mode: String,
        /// Drop flat-tree end tensors that only rotate a local basis.
        #[arg(long)]
        discount: bool,
    },
}

fn init_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("RAGETN_THREADS") {
        let n: usize = v.parse().map_err(|_| format!("RAGETN_THREADS must be an integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::Run { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let cfg = match ExperimentConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            match experiments::run(&cfg) {
                Ok(r) => {
                    println!("wrote {} ({} rows, {:.2} s)", r.csv_path.display(), r.table.rows.len(), r.wall_time);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Selftest { seed } => {
            let checks = selftest::run_checks(seed);
            let mut ok = true;
            for c in &checks {
                let status = if c.passed() { "pass" } else { "FAIL" };
                println!("{status} {:<22} max error {:.3e} (tolerance {:.1e})", c.name, c.max_error, c.tolerance);
                ok &= c.passed();
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::ParamCount { spec, mode, discount } => {
            let result = spec
                .parse::<ParamSpec>()
                .and_then(|s| mode.parse::<CountMode>().and_then(|m| param_count(&s, m, discount)));
            match result {
                Ok(c) => {
                    println!("{c}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
