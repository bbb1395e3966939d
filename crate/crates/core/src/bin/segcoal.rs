fn main() {
    std::process::exit(segcoal::cli::main());
}
