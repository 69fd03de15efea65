fn main() {
    std::process::exit(chimix::cli::main_with_args(std::env::args_os()));
}
