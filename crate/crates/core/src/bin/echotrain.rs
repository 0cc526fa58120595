fn main() {
    std::process::exit(echotrain::cli::run_cli(std::env::args_os()));
}
