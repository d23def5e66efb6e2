fn main() {
    std::process::exit(evsnn::cli::run(std::env::args_os()));
}
