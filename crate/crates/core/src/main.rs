fn main() {
    std::process::exit(truncon::cli::run(std::env::args_os()));
}
