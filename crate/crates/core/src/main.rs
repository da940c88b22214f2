fn main() {
    std::process::exit(windrf::cli::main_with_args(std::env::args_os()));
}
