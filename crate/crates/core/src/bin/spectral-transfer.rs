fn main() {
    std::process::exit(spectral_transfer::cli::run(std::env::args_os()));
}
