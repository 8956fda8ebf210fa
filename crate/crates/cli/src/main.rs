fn main() {
    std::process::exit(binormal_cli::run(std::env::args_os()));
}
