fn main() {
    std::process::exit(kashin_cli::run(std::env::args_os()));
}
