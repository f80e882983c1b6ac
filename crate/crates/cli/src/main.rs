fn main() {
    std::process::exit(fpflow_cli::cli::main_with(std::env::args_os()));
}
