fn main() {
    std::process::exit(ortho_transfer::cli::run(std::env::args_os()));
}
