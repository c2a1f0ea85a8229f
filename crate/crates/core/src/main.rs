fn main() {
    std::process::exit(tf4ctr::cli::run(std::env::args_os()));
}
