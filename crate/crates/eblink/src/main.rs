use std::process::ExitCode;

fn main() -> ExitCode {
    eblink::cli::run()
}
