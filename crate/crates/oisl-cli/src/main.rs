fn main() {
    std::process::exit(oisl_cli::run_from(std::env::args_os()));
}
