fn main() -> std::process::ExitCode {
    bloch_lab::cli::run(std::env::args_os())
}
