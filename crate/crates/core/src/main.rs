fn main() -> std::process::ExitCode {
    qcausal::cli::main_with_args(std::env::args_os())
}
