fn main() {
    std::process::exit(featred_cli::run(std::env::args_os()));
}
