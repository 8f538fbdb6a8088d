fn main() {
    std::process::exit(phasefrac::cli::run(std::env::args_os()));
}
