use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thinstrip::commands;
use thinstrip::{Error, RunConfig};

#[derive(Parser)]
#[command(name = "thinstrip", version, about = "Eigenvalue asymptotics for thin planar strips")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for eps fan-out.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the width profile conditions.
    Validate(Common),
    /// Spectra of the limit and reduced one-dimensional operators.
    #[command(name = "solve-1d")]
    Solve1d(Common),
    /// Strip eigenvalues and eigenfunctions.
    #[command(name = "solve-2d")]
    Solve2d(Common),
    /// eps sweep with rate fits and plot data.
    Sweep(Common),
    /// Eigenfunction distances along the eps list.
    Eigfun(Common),
    /// Two-sided bounds for profiles vanishing at the endpoints.
    Bracket(Common),
}

fn run(cli: Cli) -> Result<(), Error> {
    let common = match &cli.command {
        Command::Validate(c)
        | Command::Solve1d(c)
        | Command::Solve2d(c)
        | Command::Sweep(c)
        | Command::Eigfun(c)
        | Command::Bracket(c) => c,
    };
    let cfg = RunConfig::load(&common.config)?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("thinstrip-out"));
    let jobs = common.jobs.max(1);
    let written = match cli.command {
        Command::Validate(_) => {
            let (report, files) = commands::cmd_validate(&cfg, &out)?;
            println!("profile valid (positivity: {:?})", report.positivity);
            files
        }
        Command::Solve1d(_) => commands::cmd_solve_1d(&cfg, &out)?,
        Command::Solve2d(_) => commands::cmd_solve_2d(&cfg, &out, jobs)?,
        Command::Sweep(_) => commands::cmd_sweep(&cfg, &out, jobs)?,
        Command::Eigfun(_) => commands::cmd_eigfun(&cfg, &out, jobs)?,
        Command::Bracket(_) => commands::cmd_bracket(&cfg, &out, jobs)?,
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("THINSTRIP_LOG", "error")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Error::ValidationFailed(v) = e.root() {
                eprintln!("profile validation failed:");
                for line in v {
                    eprintln!("  {line}");
                }
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
