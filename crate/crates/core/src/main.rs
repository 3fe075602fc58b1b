fn main() {
    std::process::exit(hlas::cli::main_entry(std::env::args_os()));
}
