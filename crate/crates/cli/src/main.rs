fn main() {
    std::process::exit(dmk_cli::run(std::env::args_os()));
}
