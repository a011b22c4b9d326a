fn main() {
    std::process::exit(cmaqf::cli::run(std::env::args_os()));
}
