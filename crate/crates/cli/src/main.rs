fn main() {
    std::process::exit(longrun_cli::run_cli(std::env::args()));
}
