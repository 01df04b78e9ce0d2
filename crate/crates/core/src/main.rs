fn main() {
    std::process::exit(acrds::experiments::cli::run(std::env::args_os()));
}
