fn main() {
    std::process::exit(stpp::cli::run(std::env::args_os()));
}
