//! `cdrisk <command> --config <path> [--seed S] [--threads T]`

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cdrisk", version, about = "Product tails and ruin probabilities under conditional dependence")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check model parameters and the conditions behind the asymptotics
    Validate(Common),
    /// Compute E[Y^alpha s(Y)]
    Breiman(Common),
    /// Monte Carlo P(XY > x) / F(x) tail against the predicted constant
    TailRatio(Common),
    /// Deterministic uniformity diagnostic
    CdCheck(Common),
    /// Finite- or infinite-horizon ruin probabilities
    Ruin(Common),
    /// Tail of a single discounted term
    TermTail(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Decimal or 0x-prefixed hex; overrides the config
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Cmd::Validate(a) => ("validate", a),
        Cmd::Breiman(a) => ("breiman", a),
        Cmd::TailRatio(a) => ("tail-ratio", a),
        Cmd::CdCheck(a) => ("cd-check", a),
        Cmd::Ruin(a) => ("ruin", a),
        Cmd::TermTail(a) => ("term-tail", a),
    };
    let code = cdrisk::cli::run(name, &args.config, args.seed.as_deref(), args.threads);
    ExitCode::from(code as u8)
}
