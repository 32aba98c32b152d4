fn main() {
    std::process::exit(degenpred::cli::run(std::env::args_os()));
}
