fn main() {
    std::process::exit(wvsim::cli::run(std::env::args_os()));
}
