fn main() {
    std::process::exit(ramgaps::cli::main());
}
