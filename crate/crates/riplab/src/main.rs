fn main() {
    std::process::exit(riplab::cli::main_with_args(std::env::args_os()));
}
