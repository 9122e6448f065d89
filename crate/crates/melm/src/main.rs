use std::process::ExitCode;

fn main() -> ExitCode {
    melm::cli::run(std::env::args_os())
}
