fn main() {
    std::process::exit(plc_cli::run(std::env::args_os()));
}
