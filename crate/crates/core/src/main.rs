fn main() {
    std::process::exit(tempact::cli::run_from_args(std::env::args_os()));
}
