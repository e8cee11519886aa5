fn main() {
    std::process::exit(embedcheck::cli::run(std::env::args_os()));
}
