//! Argument parsing and dispatch.

use std::ffi::OsString;

use clap::{Parser, Subcommand};

use crate::commands::{cmd_compare, cmd_equilibrium, cmd_run};
use crate::config::SpecArgs;
use crate::error::Result;
use crate::presets;
use crate::verify::{cmd_verify, Fault, Level};

#[derive(Debug, Parser)]
#[command(name = "fpflow", version, about = "Fokker-Planck free-energy decay experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run experiments and write `<name>_trace.csv` and `<name>_fe.svg`
    Run(SpecArgs),
    /// Run several experiments on one grid and write `compare.csv` and `compare.svg`
    Compare {
        #[command(flatten)]
        spec: SpecArgs,
        /// Member preset; repeat for each member
        #[arg(long = "member")]
        members: Vec<String>,
    },
    /// Write the equilibrium density to `<name>_eq.csv`
    Equilibrium(SpecArgs),
    /// Run the property suites
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: Level,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// List the experiment presets
    Presets,
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(&args.resolve(&[])?).map(|_| ()),
        Command::Compare { spec, members } => cmd_compare(&spec.resolve(&members)?).map(|_| ()),
        Command::Equilibrium(args) => cmd_equilibrium(&args.resolve(&[])?),
        Command::Verify {
            level,
            inject_fault,
        } => cmd_verify(level, inject_fault),
        Command::Presets => {
            print!("{}", presets::listing());
            Ok(())
        }
    }
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "fpflow", "run", "--preset", "fig-fe-1d-D1", "--n-cells", "50", "--boundary", "noflux",
            "--fit-floor", "1e-10", "--out", "o",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else { panic!("not run") };
        let specs = args.resolve(&[]).unwrap();
        assert_eq!(specs.len(), 1);
        assert_eq!(specs[0].n_cells, 50);
        assert_eq!(specs[0].fit.floor, 1e-10);
    }
}
