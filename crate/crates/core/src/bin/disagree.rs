fn main() {
    std::process::exit(disagreement::cli::main_with_args(std::env::args_os()));
}
