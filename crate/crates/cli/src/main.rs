fn main() {
    std::process::exit(anisofit_cli::run(std::env::args_os()));
}
