use std::process::ExitCode;

fn main() -> ExitCode {
    dff_core::cli::main()
}
