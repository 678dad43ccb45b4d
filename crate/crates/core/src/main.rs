fn main() {
    std::process::exit(cmdkit::cli::run_cli(std::env::args_os()));
}
