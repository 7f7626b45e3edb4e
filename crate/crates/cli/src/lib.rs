//! Command-line front end for the `platoon` binary.

pub mod args;
pub mod commands;
pub mod config;
pub mod svg;

use anyhow::Result;

use args::{Cli, Command};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Region(a) => commands::region(a),
        Command::Check(a) => commands::check(a),
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Montecarlo(a) => commands::montecarlo(a),
        Command::Sweep(a) => commands::sweep(a),
    }
}
