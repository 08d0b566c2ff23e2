fn main() {
    std::process::exit(structcomp::cli::run(std::env::args_os()));
}
