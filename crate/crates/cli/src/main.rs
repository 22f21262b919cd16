fn main() {
    std::process::exit(mostinfo_cli::run(std::env::args_os()));
}
