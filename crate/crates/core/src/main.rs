fn main() {
    std::process::exit(cusp_weyl::cli::main_with_args(std::env::args_os()));
}
