use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(gevo_cli::run(std::env::args_os()))
}
