fn main() {
    std::process::exit(relaydiv_cli::run(std::env::args_os()));
}
