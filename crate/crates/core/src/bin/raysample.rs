fn main() {
    std::process::exit(raysample::cli::run(std::env::args_os()));
}
