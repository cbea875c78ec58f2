fn main() {
    std::process::exit(nonlocal_cp::cli::run_cli(std::env::args_os()));
}
