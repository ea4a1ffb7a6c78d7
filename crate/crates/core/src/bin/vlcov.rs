use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use vlc_coverage::cli::{self, Command, ExperimentConfig, RunError};
use vlc_coverage::parallel;
use vlc_coverage::simulator::Mode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Coverage,
    Rate,
    Validate,
    Interference,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Analytic,
    Mc,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Independent,
    Mirrored,
}

/// Coverage of indoor VLC attocell networks with wall reflections.
#[derive(Debug, Parser)]
#[command(name = "vlcov", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// key = value config file; defaults are used for omitted keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Highest reflection order
    #[arg(long)]
    k: Option<usize>,
    /// Wall reflection coefficient
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Worker threads (overrides VLCOV_THREADS)
    #[arg(long)]
    threads: Option<usize>,
    /// Print the effective config and exit
    #[arg(long)]
    dump_config: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match real_main(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vlcov: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn real_main(args: &Args) -> Result<(), RunError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(e) = args.engine {
        cfg.engine = match e {
            EngineArg::Analytic => cli::Engine::Analytic,
            EngineArg::Mc => cli::Engine::Mc,
            EngineArg::Both => cli::Engine::Both,
        };
    }
    if let Some(k) = args.k {
        cfg.params.k_max = k;
    }
    if let Some(eta) = args.eta {
        cfg.params.eta = eta;
    }
    if let Some(m) = args.mode {
        cfg.mode = match m {
            ModeArg::Independent => Mode::Independent,
            ModeArg::Mirrored => Mode::Mirrored,
        };
    }
    if let Some(o) = &args.out {
        cfg.output = Some(o.clone());
    }
    cfg.validate()?;
    if args.dump_config {
        print!("{}", cfg.dump());
        return Ok(());
    }
    let cmd = match args.command {
        Cmd::Coverage => Command::Coverage,
        Cmd::Rate => Command::Rate,
        Cmd::Validate => Command::Validate,
        Cmd::Interference => Command::Interference,
    };
    let workers = args.threads.or_else(parallel::env_workers);
    match workers {
        Some(n) => parallel::with_workers(n, || cli::execute(cmd, &cfg)),
        None => cli::execute(cmd, &cfg),
    }
}
