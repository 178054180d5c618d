fn main() {
    std::process::exit(qrskit::cli::run(std::env::args_os()));
}
