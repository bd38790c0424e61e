fn main() {
    std::process::exit(metastable::cli::main_with_args(std::env::args_os()));
}
