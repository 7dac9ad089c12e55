fn main() {
    std::process::exit(wavegcc::cli::main_with_args(std::env::args_os()));
}
