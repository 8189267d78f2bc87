fn main() {
    let status = kanlb::cli::run_from_args(std::env::args_os());
    std::process::exit(status.code());
}
