fn main() -> std::process::ExitCode {
    cefusion::cli::main_with_args(std::env::args_os())
}
