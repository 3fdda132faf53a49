fn main() {
    std::process::exit(emocpd::cli::run(std::env::args_os()));
}
