fn main() {
    std::process::exit(apfront::cli::main_with_args(std::env::args_os()));
}
