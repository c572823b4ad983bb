fn main() {
    std::process::exit(socsim::cli::cli_main(std::env::args_os()));
}
