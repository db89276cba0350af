use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use zopabi::cli::{run_command, Command};

#[derive(Parser)]
#[command(
    name = "zopabi",
    version,
    about = "Hidden-state privacy accounting and simulation for noisy zeroth-order descent"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the epsilon-versus-T CSV.
    Account(Common),
    /// Simulate trajectories and write their CSV plus a JSON summary.
    Simulate(Common),
    /// Run the Monte Carlo checks and write one JSON line per check.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Account(a) => (Command::Account, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Verify(a) => (Command::Verify, a),
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    std::process::exit(run_command(cmd, &args.config, args.out.as_deref()));
}
