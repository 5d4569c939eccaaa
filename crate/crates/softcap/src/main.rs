use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use softcap::commands;
use softcap::error::CliError;

/// Feedback-controlled Full/Cache scheduling simulator.
#[derive(Parser)]
#[command(name = "softcap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Output directory (default: spec's out_dir, else ./softcap_out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bound on parallel rows for sweeps and ablations.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override the config seed(s); SOFTCAP_SEED does the same with lower
    /// precedence.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and write JSONL/CSV traces plus a summary.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the policy over a cap grid and seed ensemble.
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run controlled variants of a baseline config.
    Ablate {
        spec: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tabulate and freeze a reference profile.
    #[command(name = "profile-build")]
    ProfileBuild {
        spec: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SOFTCAP_SEED") {
        Ok(raw) => raw
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("SOFTCAP_SEED must be an integer, got '{raw}'"))),
        Err(_) => Ok(None),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, common } => {
            let seed = resolve_seed(common.seed)?;
            let out = common
                .out
                .unwrap_or_else(|| PathBuf::from("softcap_out"));
            let outputs = commands::cmd_run(&config, &out, seed)?;
            let s = &outputs.wire_summary;
            println!(
                "run: {} full ({} warmup / {} guard / {} crossing), cost {:.4}, speedup {:.4}",
                s.actual_full, s.warmup_full, s.guard_full, s.crossing_full, s.total_cost, s.speedup
            );
            println!(
                "wrote {}, {}, {}",
                outputs.jsonl.display(),
                outputs.csv.display(),
                outputs.summary.display()
            );
            Ok(())
        }
        Command::Sweep { spec, common } => {
            let seed = resolve_seed(common.seed)?;
            let outputs = commands::cmd_sweep(&spec, common.out.as_deref(), common.jobs, seed)?;
            println!(
                "wrote {}, {}, {}",
                outputs.rows_csv.display(),
                outputs.caps_csv.display(),
                outputs.plot_csv.display()
            );
            Ok(())
        }
        Command::Ablate { spec, common } => {
            let seed = resolve_seed(common.seed)?;
            let outputs = commands::cmd_ablate(&spec, common.out.as_deref(), common.jobs, seed)?;
            println!("wrote {}", outputs.report_csv.display());
            Ok(())
        }
        Command::ProfileBuild { spec, common } => {
            let seed = resolve_seed(common.seed)?;
            commands::cmd_profile_build(&spec, common.out.as_deref(), seed)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
