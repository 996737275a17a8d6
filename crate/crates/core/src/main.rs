fn main() {
    std::process::exit(emml::harness::cli_main(std::env::args_os()));
}
