//! Command-line pipeline for tamper-evident sensor logs.
//!
//! Subcommands: `record` a stream from data bodies, `lose` and `tamper`
//! build loss/corruption fixtures, `verify` classifies a partial log
//! against the anchor, `anchor-query` inspects the emulated contract
//! state, and `simulate` sweeps verifiability under loss.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or I/O errors.

use clap::Parser;

mod commands;

use commands::Cli;

fn main() {
    let cli = Cli::parse();
    std::process::exit(commands::run(cli));
}
