fn main() {
    std::process::exit(datatailor_cli::run(std::env::args_os()));
}
