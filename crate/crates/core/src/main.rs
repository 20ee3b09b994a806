fn main() {
    std::process::exit(impatient::cli::run(std::env::args_os()));
}
