fn main() {
    std::process::exit(wick_forge::cli::run());
}
