fn main() {
    std::process::exit(rollpass::cli::run(std::env::args_os()));
}
