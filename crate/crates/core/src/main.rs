fn main() {
    std::process::exit(qmetro::harness::cli::run());
}
