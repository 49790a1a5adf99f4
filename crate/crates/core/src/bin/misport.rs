fn main() {
    std::process::exit(mis_portfolio::cli::main_with_args(std::env::args_os()));
}
