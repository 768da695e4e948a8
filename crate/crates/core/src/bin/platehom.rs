fn main() {
    std::process::exit(platehom::cli::run(std::env::args_os()));
}
