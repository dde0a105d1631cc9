fn main() {
    std::process::exit(rydberg_xpm::cli::run(std::env::args_os()));
}
