fn main() {
    std::process::exit(mixedop::cli::run(std::env::args_os()));
}
