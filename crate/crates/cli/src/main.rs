use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tptomo::pipeline::{run_command, Command, ExtractionMethod, Overrides, RunManifest};
use tptomo::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Symbol,
    Solver,
}

/// Two-photon scattering simulation and density tomography.
#[derive(Parser, Debug)]
#[command(name = "tptomo", version)]
struct Args {
    /// Run manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// simulate, measure, check-geometry, extract, reconstruct or validate.
    #[arg(long)]
    command: String,
    /// Output directory; defaults to the manifest's output.directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Extraction path for `extract`.
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Regularization weight for `reconstruct`.
    #[arg(long)]
    lambda_reg: Option<f64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Validation(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let Some(command) = Command::parse(&args.command) else {
        eprintln!("error: unknown command {:?}", args.command);
        return ExitCode::from(1);
    };
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut manifest = match RunManifest::load(&args.manifest) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}: {e}", args.manifest.display());
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Some(s) = args.seed {
        manifest.seed = s;
    }
    let out = args
        .out
        .or_else(|| manifest.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let overrides = Overrides {
        method: args.method.map(|m| match m {
            Method::Symbol => ExtractionMethod::Symbol,
            Method::Solver => ExtractionMethod::Solver,
        }),
        lambda_reg: args.lambda_reg,
    };
    log::info!("{} -> {}", command.name(), out.display());
    match run_command(&manifest, command, &out, &overrides) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}: {e}", command.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
