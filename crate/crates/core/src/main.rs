fn main() {
    std::process::exit(dpct::cli::run_from_args(std::env::args_os()));
}
