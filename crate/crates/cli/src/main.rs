fn main() {
    std::process::exit(seal_cli::cli::run(std::env::args_os()));
}
