fn main() {
    std::process::exit(lindbladlab::cli::main_with_args(std::env::args_os()));
}
