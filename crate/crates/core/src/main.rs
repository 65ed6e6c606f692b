fn main() {
    std::process::exit(psc_tsa::cli::main_with_args(std::env::args_os()));
}
