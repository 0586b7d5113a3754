use std::process::ExitCode;

fn main() -> ExitCode {
    hgt::cli::main_with_args(std::env::args_os())
}
