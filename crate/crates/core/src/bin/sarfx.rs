fn main() {
    std::process::exit(sarfx::cli::main_with_args(std::env::args_os()));
}
