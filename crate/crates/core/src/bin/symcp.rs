fn main() {
    std::process::exit(symcp::cli::main_with_args(std::env::args().collect()));
}
