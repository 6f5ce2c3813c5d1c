fn main() {
    std::process::exit(portcut::cli::main());
}
