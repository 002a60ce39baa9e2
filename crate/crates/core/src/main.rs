fn main() {
    std::process::exit(smoothq::cli::run(std::env::args_os()));
}
