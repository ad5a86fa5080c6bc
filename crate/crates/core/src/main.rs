fn main() {
    std::process::exit(h2grid::cli::run(std::env::args_os()));
}
