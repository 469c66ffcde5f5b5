fn main() {
    std::process::exit(peakdist::cli::run());
}
