fn main() {
    std::process::exit(densecascade::cli::run(std::env::args_os()));
}
