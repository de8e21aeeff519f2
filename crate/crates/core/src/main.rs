fn main() {
    std::process::exit(coherence_lab::cli::main_with_args(std::env::args_os()));
}
