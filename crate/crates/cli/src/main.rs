use std::process::ExitCode;

fn main() -> ExitCode {
    knn_index_cli::run(std::env::args_os())
}
