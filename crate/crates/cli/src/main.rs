use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

mod config;
mod run;

use run::RunError;

/// Experiment runner for the two-pole CP1 sigma-model laboratory.
#[derive(Parser)]
#[command(name = "cp1lax", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the output directory from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config file, printing the normalised form.
    Validate { config: PathBuf },
    /// Summarise a finished run directory.
    Report { dir: PathBuf },
}

fn fail(e: RunError) -> ExitCode {
    println!("{}", serde_json::to_string_pretty(&e.to_json()).expect("error json"));
    ExitCode::from(e.exit_code())
}

fn print_checks(v: &Value) {
    println!("experiment {}  config {}", v["experiment"].as_str().unwrap_or("?"), v["config_hash"].as_str().unwrap_or("?"));
    for c in v["checks"].as_array().into_iter().flatten() {
        let tag = if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
        let op = if c["kind"] == "min" { ">=" } else { "<=" };
        println!("  {tag} {}: {} ({op} {})", c["name"].as_str().unwrap_or("?"), c["value"], c["bound"]);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match config::validate_config(&config) {
            Ok(cfg) => {
                println!("{}", serde_json::to_string_pretty(&cfg).expect("config json"));
                ExitCode::SUCCESS
            }
            Err(e) => fail(e.into()),
        },
        Command::Run { config, out } => {
            let mut cfg = match config::validate_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e.into()),
            };
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            match run::run(&cfg) {
                Ok(summary) => {
                    print_checks(&serde_json::to_value(&summary).expect("summary json"));
                    if summary.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(3)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Report { dir } => match run::report(&dir) {
            Ok((v, pass)) => {
                print_checks(&v);
                for f in v["files"].as_array().into_iter().flatten() {
                    println!("  file {}", f.as_str().unwrap_or("?"));
                }
                ExitCode::from(if pass { 0 } else { 3 })
            }
            Err(e) => fail(e),
        },
    }
}
