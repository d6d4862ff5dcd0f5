fn main() {
    std::process::exit(siscatter_cli::run(std::env::args_os()));
}
