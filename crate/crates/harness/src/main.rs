fn main() {
    std::process::exit(thinfilm_harness::cli::run(std::env::args_os()));
}
