fn main() {
    std::process::exit(pcrnn_cli::run_from_args());
}
