fn main() {
    std::process::exit(mavguard::cli::run(std::env::args_os()));
}
