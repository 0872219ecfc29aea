use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pinnduct::Error;
use pinnduct_cli::{execute, exit_code, prepare, Command, Overrides, RunConfig, SweepKind};

#[derive(Parser)]
#[command(name = "pinnduct", version, about = "Physics-informed neural network solver for 1-D duct acoustics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    Activation,
    Collocation,
    Bias,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a configuration without computing.
    Check(Common),
    /// Train, compare with the reference solution and export fields.
    Solve(Common),
    /// Export reference solutions only.
    Oracle(Common),
    /// Activation, collocation-count or boundary-weighting studies.
    Sweep {
        kind: SweepArg,
        #[command(flatten)]
        common: Common,
    },
}

fn run(command: Command, common: &Common) -> pinnduct::Result<()> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config(e.to_string()))?;
    }
    let overrides = Overrides {
        out: common.out.clone(),
        seed: common.seed,
    };
    let cfg = prepare(RunConfig::load(&common.config)?, &overrides)?;
    let written = execute(command, &cfg)?;
    match command {
        Command::Check => println!("{}: ok", common.config.display()),
        _ => {
            for p in written {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Cmd::Check(c) => (Command::Check, c),
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Oracle(c) => (Command::Oracle, c),
        Cmd::Sweep { kind, common } => {
            let k = match kind {
                SweepArg::Activation => SweepKind::Activation,
                SweepArg::Collocation => SweepKind::Collocation,
                SweepArg::Bias => SweepKind::Bias,
            };
            (Command::Sweep(k), common)
        }
    };
    let result = run(command, common);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&result) as u8)
}
