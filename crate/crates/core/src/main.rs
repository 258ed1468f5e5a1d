fn main() {
    std::process::exit(modularis::cli::parse_and_dispatch(std::env::args_os()));
}
