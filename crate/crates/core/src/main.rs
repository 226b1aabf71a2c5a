fn main() {
    std::process::exit(paraf_core::cli::main_from(std::env::args_os()));
}
