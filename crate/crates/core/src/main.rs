fn main() {
    std::process::exit(emoter::cli::run(std::env::args_os()));
}
