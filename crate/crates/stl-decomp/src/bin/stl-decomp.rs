use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(stl_decomp::cli::run(std::env::args_os()) as u8)
}
