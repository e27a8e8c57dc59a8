fn main() {
    std::process::exit(fwdrep::cli::run(std::env::args_os()));
}
