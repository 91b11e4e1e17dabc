fn main() {
    std::process::exit(jointgraphon::cli::run(std::env::args_os()));
}
