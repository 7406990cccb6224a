//! `teleport-hv`: exact teleportation-protocol checks and hidden-variable
//! consistency reports.
//!
//! Exit codes: 0 pass, 2 tolerance breach, 3 verdict mismatch against an
//! `--expect-*` flag, 64 usage or parse error, 1 internal failure.

mod args;
mod commands;
mod report;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Cmd, HvCmd, NogoCmd, TeleportCmd};
use commands::EXIT_USAGE;

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };

    let result = match cli.command {
        Cmd::Teleport(TeleportCmd::Verify(a)) => commands::teleport_verify(a),
        Cmd::Hv(HvCmd::Expect(a)) => commands::hv_expect(a),
        Cmd::Nogo(NogoCmd::OneSpin(a)) => commands::nogo_one_spin(a),
        Cmd::Nogo(NogoCmd::Tp(a)) => commands::nogo_tp(a),
        Cmd::StateDep(a) => commands::state_dep(a),
    };

    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}
