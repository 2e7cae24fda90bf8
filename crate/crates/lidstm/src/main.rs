use std::process::ExitCode;

fn main() -> ExitCode {
    lidstm::cli::run()
}
