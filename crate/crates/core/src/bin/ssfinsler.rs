fn main() {
    std::process::exit(ssfinsler::cli::main_with_args(std::env::args_os()));
}
