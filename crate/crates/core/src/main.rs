fn main() {
    let code = tvpd::harness::cli::cli_main(std::env::args_os());
    std::process::exit(code);
}
