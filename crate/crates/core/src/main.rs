use std::process::ExitCode;

fn main() -> ExitCode {
    learnsim::cli::main()
}
