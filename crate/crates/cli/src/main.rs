// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdiff_core::pipeline::{self, ExperimentConfig, OracleReport};
use qdiff_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "qdiff", version, about = "Quantum noise as SDEs, and score-based denoising")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the integrators against analytic and master-equation oracles.
    OracleCheck(Common),
    /// Sample clean states and their corrupted copies.
    MakeDataset(Common),
    /// Train the score network on the training split.
    Train(Common),
    /// Corrupt, denoise and score the held-out split.
    DenoiseEval(Common),
    /// Aggregate evaluated runs into a table and CSVs.
    Report(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override one config leaf, e.g. `--set train.steps=100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Run directory; overrides `out_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut overrides = self.set.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        if let Some(out) = &self.out {
            let out = out.to_str().ok_or_else(|| Error::InvalidInput("--out is not valid UTF-8".into()))?;
            overrides.push(format!("out_dir={}", serde_json::Value::String(out.into())));
        }
        let cfg = ExperimentConfig::load(&self.config, &overrides)?;
        let dir = PathBuf::from(&cfg.out_dir);
        Ok((cfg, dir))
    }
}

fn run(cli: Cli) -> Result<()> {
    let (Command::OracleCheck(c)
    | Command::MakeDataset(c)
    | Command::Train(c)
    | Command::DenoiseEval(c)
    | Command::Report(c)) = &cli.command;
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let (cfg, dir) = c.load()?;
    match &cli.command {
        Command::OracleCheck(_) => {
            let result = pipeline::cmd_oracle_check(&cfg, &dir);
            let written = dir.join("oracle_check.json");
            if let Ok(report) = pipeline::io::read_json::<OracleReport>(&written, "oracle report") {
                for check in &report.checks {
                    println!(
                        "{} {} {} {} {}",
                        if check.passed { "PASS" } else { "FAIL" },
                        check.name,
                        check.value,
                        check.comparison,
                        check.tolerance
                    );
                }
            }
            result.map(|_| ())
        }
        Command::MakeDataset(_) => {
            let data = pipeline::cmd_make_dataset(&cfg, &dir)?;
            println!("wrote {} samples to {}", data.samples.len(), dir.join("dataset.json").display());
            Ok(())
        }
        Command::Train(_) => {
            let rec = pipeline::cmd_train(&cfg, &dir)?;
            println!(
                "trained {} steps on {} samples; final smoothed loss {:.6}",
                rec.steps,
                rec.n_train,
                rec.final_smoothed_loss.unwrap_or(f64::NAN)
            );
            Ok(())
        }
        Command::DenoiseEval(_) => {
            let m = pipeline::cmd_denoise_eval(&cfg, &dir)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
            Ok(())
        }
        Command::Report(_) => {
            let table = pipeline::cmd_report(&dir, cfg.report.force, cfg.eval.histogram_bins)?;
            print!("{table}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
