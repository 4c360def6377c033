fn main() {
    std::process::exit(critspec_cli::main_with_args(std::env::args_os()));
}
