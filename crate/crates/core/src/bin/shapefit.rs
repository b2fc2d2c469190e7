fn main() {
    std::process::exit(shapefit::cli::main_with_args(std::env::args_os()));
}
