fn main() {
    std::process::exit(splinesip::cli::run_from(std::env::args_os()));
}
