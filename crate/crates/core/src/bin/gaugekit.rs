fn main() {
    std::process::exit(gaugekit::cli::main_from(std::env::args_os()));
}
