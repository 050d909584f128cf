fn main() {
    std::process::exit(vbkreg::cli::main_with_args(std::env::args_os()));
}
