fn main() {
    std::process::exit(twr_harvest::harness::cli::run(std::env::args_os()));
}
