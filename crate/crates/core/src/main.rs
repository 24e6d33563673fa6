fn main() {
    std::process::exit(brownring::cli::run(std::env::args_os()));
}
