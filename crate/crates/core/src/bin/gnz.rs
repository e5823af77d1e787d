fn main() {
    std::process::exit(gnz::cli::run(std::env::args_os()).code());
}
