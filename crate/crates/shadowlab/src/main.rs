fn main() {
    std::process::exit(shadowlab::cli::main_with_args(std::env::args_os()));
}
