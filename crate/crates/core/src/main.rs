use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use online_mdp::cli::{execute, mixing_check_files, CliError, Command, Outcome};
use online_mdp::config::load_config;

#[derive(Parser)]
#[command(name = "online-mdp", version, about = "Online MDP simulator with a lazily switching policy learner")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Directory for output files.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for Monte Carlo fan-out.
    #[arg(long, env = "ONLINE_MDP_WORKERS")]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Play one game and write the per-round trace.
    Run(Common),
    /// Monte Carlo over seeds for every horizon; writes summary.csv.
    Sweep(Common),
    /// Shrinking dartboard and exponential weights on synthetic loss streams.
    ExpertsBench(Common),
    /// Certify uniform mixing of model files, or of a config's adversary.
    MixingCheck {
        #[arg(short, long, conflicts_with = "models")]
        config: Option<PathBuf>,
        /// Model files in the text matrix format.
        models: Vec<PathBuf>,
    },
    /// Write the eps-cover of the policy space.
    Cover(Common),
}

fn dispatch(cmd: Cmd) -> Result<Outcome, CliError> {
    let (command, common) = match cmd {
        Cmd::Run(c) => (Command::Run, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::ExpertsBench(c) => (Command::ExpertsBench, c),
        Cmd::Cover(c) => (Command::Cover, c),
        Cmd::MixingCheck { config, models } => {
            return match config {
                Some(path) => execute(Command::MixingCheck, &load_config(&path)?, &PathBuf::new(), None),
                None if models.is_empty() => Err(CliError::Usage("give model files or --config".into())),
                None => mixing_check_files(&models),
            };
        }
    };
    let config = load_config(&common.config)?;
    execute(command, &config, &common.out, common.workers)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(outcome) => {
            print!("{}", outcome.message);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
