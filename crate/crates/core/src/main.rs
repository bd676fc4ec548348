fn main() {
    std::process::exit(casimir_mag::cli::main_with_args(std::env::args_os()));
}
