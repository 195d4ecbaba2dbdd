fn main() {
    std::process::exit(lowner_cli::run(std::env::args_os()));
}
