fn main() {
    std::process::exit(pcr_clearing::cli::run());
}
