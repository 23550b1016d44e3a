fn main() {
    std::process::exit(flyq::cli::run_from(std::env::args_os()));
}
