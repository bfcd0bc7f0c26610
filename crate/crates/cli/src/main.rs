fn main() {
    std::process::exit(genbayes_cli::run(std::env::args_os()));
}
