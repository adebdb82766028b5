//! `hylosolve`: hypothesis audits, soliton computation and stability runs
//! driven by a JSON configuration.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, FailureKind, Run};
use config::RunConfig;
use manifest::{Manifest, Outputs};

#[derive(Parser)]
#[command(name = "hylosolve", version, about = "Variational solitons and their stability on periodic grids")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Silence progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the model hypotheses and write certificate.json.
    Check,
    /// Estimate the vanishing-probe floor Λ₀.
    Lambda0,
    /// Audit, then minimize J_δ along the configured δ list.
    Minimize,
    /// Evolve a field file, or the first minimizer when none is given.
    Evolve {
        /// Initial field file.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Perturb the first minimizer and audit the Lyapunov function.
    Stability,
    /// Cartesian product of the listed potentials and δ values.
    Sweep,
    /// End-to-end cubic NLS pipeline with the closed-form soliton check.
    Demo,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Lambda0 => "lambda0",
            Command::Minimize => "minimize",
            Command::Evolve { .. } => "evolve",
            Command::Stability => "stability",
            Command::Sweep => "sweep",
            Command::Demo => "demo",
        }
    }
}

const DEFAULT_OUT: &str = "hylosolve-out";

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = now();
    let argv: Vec<String> = std::env::args().collect();

    let loaded = match (&cli.config, &cli.command) {
        (Some(path), _) => RunConfig::load(path),
        (None, Command::Demo) => Ok(RunConfig::demo()),
        (None, _) => Err("--config is required for this command".to_string()),
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| loaded.as_ref().ok().and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut outputs = Outputs::new(out_dir);

    let (result, config_echo, seed, certificate) = match loaded {
        Err(msg) => (Err(Failure::new(FailureKind::Config, "config", msg)), None, cli.seed, None),
        Ok(cfg) => {
            let seed = cli.seed.unwrap_or(cfg.seed);
            let echo = serde_json::to_value(&cfg).ok();
            let mut run = Run { cfg, seed, out: outputs, quiet: cli.quiet, certificate: None };
            let result = match &cli.command {
                Command::Check => commands::check(&mut run),
                Command::Lambda0 => commands::lambda0(&mut run),
                Command::Minimize => commands::minimize(&mut run),
                Command::Evolve { init } => commands::evolve_cmd(&mut run, init.as_deref()),
                Command::Stability => commands::stability(&mut run),
                Command::Sweep => commands::sweep(&mut run),
                Command::Demo => commands::demo(&mut run),
            };
            outputs = run.out;
            (result, echo, Some(seed), run.certificate)
        }
    };

    let code = match &result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("hylosolve {}: {} failed: {}", cli.command.name(), f.stage, f.message);
            f.kind.exit_code()
        }
    };
    let manifest = Manifest {
        tool: "hylosolve",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().into(),
        argv,
        seed,
        config: config_echo,
        started,
        finished: now(),
        status: if code == 0 { "ok" } else { "failed" },
        exit_code: code,
        failure_stage: result.as_ref().err().map(|f| f.stage.clone()),
        failure_message: result.as_ref().err().map(|f| f.message.clone()),
        outputs: outputs.files().to_vec(),
        certificate,
    };
    if let Err(e) = outputs.write_json("manifest", "manifest.json", &manifest) {
        eprintln!("hylosolve: could not write the manifest: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code as u8)
}
