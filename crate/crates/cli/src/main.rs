fn main() {
    std::process::exit(odlqr_cli::main_with_args(std::env::args_os()));
}
