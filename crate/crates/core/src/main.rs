fn main() {
    std::process::exit(gsscm::cli::main_with_args(std::env::args_os()));
}
