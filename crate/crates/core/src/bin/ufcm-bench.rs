use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use ufcm::bench::{self, ExperimentConfig};
use ufcm::Error;

#[derive(Parser)]
#[command(name = "ufcm-bench", about = "Run and inspect UFCM / R-UFCM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunFlags {
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides the trace row interval.
    #[arg(long)]
    trace_every: Option<usize>,
}

impl RunFlags {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = Some(d.clone());
        }
        if let Some(k) = self.trace_every {
            cfg.trace_every = k;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configured experiment and write `<name>.csv` and `<name>.json`.
    Solve {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run the config over its `sweep_epsilons`.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Print the aggregate constants for a catalog instance.
    Constants {
        instance: String,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Recompute fixtures and check schedule conditions on every catalog instance.
    Validate {
        #[arg(long, default_value_t = 200)]
        horizon: usize,
    },
    /// Run two configs and print their summaries side by side.
    Compare { a: PathBuf, b: PathBuf },
}

fn load(path: &PathBuf, flags: &RunFlags) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn exit_for(err: &anyhow::Error) -> ExitCode {
    match err.downcast_ref::<Error>() {
        Some(Error::Diverged { .. } | Error::InnerBudget { .. } | Error::NonFinite(_)) => ExitCode::from(2),
        Some(Error::Fixture(_)) => ExitCode::from(3),
        _ => ExitCode::FAILURE,
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Solve { config, flags } => {
            let cfg = load(&config, &flags)?;
            let out = bench::run_experiment(&cfg)?;
            let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            let (csv, json) = out.write(&dir)?;
            println!("{}", serde_json::to_string_pretty(&out.summary)?);
            eprintln!("wrote {} and {}", csv.display(), json.display());
        }
        Command::Sweep { config, flags } => {
            let cfg = load(&config, &flags)?;
            let out = bench::sweep(&cfg)?;
            let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            for o in &out.outcomes {
                o.write(&dir)?;
            }
            let path = dir.join(format!("{}_sweep.csv", cfg.name.clone().unwrap_or(cfg.instance.clone())));
            std::fs::write(&path, out.to_csv_string()?)?;
            print!("{}", out.to_csv_string()?);
            match out.slope {
                Some(s) => println!("log-log slope {s:.4}"),
                None => println!("log-log slope n/a (some runs never reached eps)"),
            }
        }
        Command::Constants { instance, epsilon, r } => {
            print!("{}", bench::constants_report(&instance, epsilon, r)?);
        }
        Command::Validate { horizon } => {
            let report = bench::validate(horizon)?;
            for (name, ok, detail) in &report.lines {
                println!("{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
            }
            if report.fixture_mismatch {
                return Ok(ExitCode::from(3));
            }
            if !report.pass() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Compare { a, b } => {
            let flags = RunFlags { seed: None, out_dir: None, trace_every: None };
            print!("{}", bench::compare(&load(&a, &flags)?, &load(&b, &flags)?)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_for(&e)
        }
    }
}
