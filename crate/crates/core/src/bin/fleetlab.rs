use std::process::ExitCode;

fn main() -> ExitCode {
    fleetlab::cli::main_with_args(std::env::args_os())
}
