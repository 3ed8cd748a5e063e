fn main() {
    std::process::exit(pormab::cli::main_with(std::env::args_os()));
}
