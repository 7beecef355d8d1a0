use std::process::ExitCode;

fn main() -> ExitCode {
    sentlen::cli::main_with_args(std::env::args_os())
}
