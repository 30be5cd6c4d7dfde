fn main() {
    std::process::exit(flapkit::cli::run(std::env::args_os()));
}
