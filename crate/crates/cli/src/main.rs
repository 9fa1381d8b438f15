use std::path::PathBuf;
use std::process::ExitCode;

use cgl_steer_cli::plotdata::emit_plotdata;
use cgl_steer_cli::{presets, run, CliError, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cgl-steer",
    version,
    about = "Simulation and bilinear control synthesis for the CGL equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Experiment configuration (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration instead of a file.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its run directory.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Write plot column files for a finished run.
    EmitPlotdata {
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Check a configuration without running it.
    ValidateConfig {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        quiet: bool,
    },
    /// List the built-in presets.
    Presets,
}

fn load(source: &Source) -> Result<ExperimentConfig, CliError> {
    match (&source.config, &source.preset) {
        (Some(path), _) => ExperimentConfig::load(path),
        (None, Some(name)) => presets::preset(name),
        (None, None) => Err(CliError::Config("either --config or --preset is required".into())),
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("CGL_STEER_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Config(format!("CGL_STEER_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run {
            source,
            out,
            seed,
            quiet,
        } => {
            let mut cfg = load(&source)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let outcome = run(&cfg, out.as_deref())?;
            if !quiet {
                println!("{}", outcome.manifest.summary);
            }
            if let Some(msg) = &outcome.manifest.message {
                eprintln!("cgl-steer: numerical failure: {msg}");
            }
            Ok(outcome.exit_code())
        }
        Command::EmitPlotdata { out, quiet } => {
            let files = emit_plotdata(&out)?;
            if !quiet {
                for f in files {
                    println!("{}", f.display());
                }
            }
            Ok(0)
        }
        Command::ValidateConfig { source, quiet } => {
            load(&source)?.validate()?;
            if !quiet {
                println!("ok");
            }
            Ok(0)
        }
        Command::Presets => {
            for n in presets::names() {
                println!("{n}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("cgl-steer: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
