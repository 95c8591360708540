use std::process::ExitCode;

fn main() -> ExitCode {
    voxloom::cli::run()
}
