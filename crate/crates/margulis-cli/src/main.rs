mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{apply_overrides, parse_tol, read_json, ExampleConfig, Scene, SceneConfig, Tolerances};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration. No report is written.
    Input(String),
    Output(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Input(m) => write!(f, "input error: {m}"),
            Self::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

/// Invariants and diagnostics for representations of free groups.
#[derive(Parser)]
#[command(name = "margulis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-ratio identities, labeling calibration and per-word identities.
    CheckIdentities(RunArgs),
    /// Margulis invariant spectrum of the affine action.
    Margulis(RunArgs),
    /// Eigenvalue-gap and Margulis spectra.
    Spectrum(RunArgs),
    /// Derivative of the middle eigenvalue along a deformation family.
    Derivative(RunArgs),
    /// Limit formulas for products of powers.
    Limits(RunArgs),
    /// Writes a scene file for a built-in example.
    GenerateExample(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, value_name = "L")]
    depth: Option<usize>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides one tolerance; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_tol)]
    tols: Vec<(String, f64)>,
    #[arg(long, value_name = "K")]
    jobs: Option<usize>,
}

fn load_scene(args: &RunArgs) -> Result<Scene, CliError> {
    let mut cfg: SceneConfig = read_json(&args.config)?;
    apply_overrides(&mut cfg, args.depth, args.seed, &args.tols)?;
    Scene::new(cfg)
}

fn run(command: Command) -> Result<commands::Outcome, CliError> {
    let (args, name) = match &command {
        Command::CheckIdentities(a) => (a, "check-identities"),
        Command::Margulis(a) => (a, "margulis"),
        Command::Spectrum(a) => (a, "spectrum"),
        Command::Derivative(a) => (a, "derivative"),
        Command::Limits(a) => (a, "limits"),
        Command::GenerateExample(a) => (a, "generate-example"),
    };
    if let Some(k) = args.jobs {
        if k == 0 {
            return Err(CliError::Input("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let outcome = match command {
        Command::GenerateExample(_) => {
            let mut example: ExampleConfig = read_json(&args.config)?;
            let mut tols = Tolerances::default();
            for (n, v) in &args.tols {
                tols.set(n, *v)?;
            }
            if let Some(s) = args.seed {
                example.set_seed(s);
            }
            commands::generate_example(&example)?
        }
        Command::CheckIdentities(_) => commands::check_identities(&load_scene(args)?)?,
        Command::Margulis(_) => commands::margulis(&load_scene(args)?)?,
        Command::Spectrum(_) => commands::spectrum_command(&load_scene(args)?)?,
        Command::Derivative(_) => commands::derivative(&load_scene(args)?)?,
        Command::Limits(_) => commands::limits(&load_scene(args)?)?,
    };
    for (file, bytes) in &outcome.files {
        report::write_atomic(&args.out, file, bytes)?;
    }
    eprintln!("{name}: {}", if outcome.pass { "all bounds met" } else { "bound violated" });
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
