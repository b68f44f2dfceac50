fn main() {
    std::process::exit(sica::cli::main_from_args(std::env::args_os()));
}
