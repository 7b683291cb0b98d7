fn main() {
    std::process::exit(acric::cli::run());
}
