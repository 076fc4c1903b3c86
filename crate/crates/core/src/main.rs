fn main() {
    std::process::exit(ordrisk::cli::main());
}
