fn main() {
    std::process::exit(parafix::cli::run_from_args(std::env::args_os()));
}
