fn main() {
    std::process::exit(harris_ar::cli::main_with_args(std::env::args_os()));
}
