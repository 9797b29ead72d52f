fn main() {
    std::process::exit(bwb_surrogate::cli::run(std::env::args_os()));
}
