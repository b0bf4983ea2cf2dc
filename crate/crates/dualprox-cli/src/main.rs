use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(dualprox_cli::cli_main(std::env::args()) as u8)
}
