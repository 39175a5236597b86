//! `limitcurve` command line tool.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{AnalysisConfig, RunConfig};
use run::Failure;

#[derive(Parser)]
#[command(name = "limitcurve", version, about = "Limit load and strength reduction analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load factor curve by indirect continuation.
    LlTrace(Common),
    /// Strength reduction curve by indirect continuation.
    SsrTrace(Common),
    /// Lower and upper bounds on the limit load factor.
    LaBracket(Common),
    /// Limit load factors of the reduced models on a grid of reduction factors.
    EllCurve(Common),
    /// Decides solvability of the unit load.
    Classify(Common),
    /// Single equilibrium solve at a fixed load factor.
    Solve(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    omega_start: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Comma separated reduction factors.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to LIMITCURVE_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

fn kind_of(cmd: &Command) -> (&'static str, &Common) {
    match cmd {
        Command::LlTrace(c) => ("ll-trace", c),
        Command::SsrTrace(c) => ("ssr-trace", c),
        Command::LaBracket(c) => ("la-bracket", c),
        Command::EllCurve(c) => ("ell-curve", c),
        Command::Classify(c) => ("classify", c),
        Command::Solve(c) => ("solve", c),
    }
}

fn prepare(cmd: &Command) -> Result<RunConfig, Failure> {
    let (name, args) = kind_of(cmd);
    let mut cfg = RunConfig::load(&args.config).map_err(Failure::Config)?;
    if cfg.analysis.name() != name {
        return Err(Failure::Config(format!(
            "config describes a '{}' analysis, not '{name}'",
            cfg.analysis.name()
        )));
    }
    if let Some(w) = args.omega_start {
        cfg.schedule.omega_start = Some(w);
    }
    if let Some(n) = args.max_steps {
        cfg.schedule.max_steps = n;
    }
    if let Some(grid) = &args.lambda_grid {
        match &mut cfg.analysis {
            AnalysisConfig::EllCurve { lambda_grid, .. } => *lambda_grid = grid.clone(),
            _ => return Err(Failure::Config("--lambda-grid applies to ell-curve only".into())),
        }
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    let threads = match args.threads {
        Some(n) => Some(n),
        None => match std::env::var("LIMITCURVE_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Failure::Config(format!("LIMITCURVE_THREADS must be a count, got '{v}'")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = prepare(&cli.command).and_then(|cfg| run::run(&cfg));
    match result {
        Ok(report) => {
            println!("{}", report.to_json().trim_end());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("ERROR {}: {}", f.code(), f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
