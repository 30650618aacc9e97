fn main() {
    std::process::exit(wtot_core::cli::main_with(std::env::args_os()));
}
