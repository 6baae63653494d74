fn main() {
    std::process::exit(mflab::cli::main_with(std::env::args_os()));
}
