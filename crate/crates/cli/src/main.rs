fn main() {
    std::process::exit(macrobell_cli::main_with_args(std::env::args_os()));
}
