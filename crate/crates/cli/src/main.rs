fn main() {
    std::process::exit(ndpnn_cli::run(std::env::args_os()));
}
