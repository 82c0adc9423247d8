fn main() {
    std::process::exit(stabletree::cli::main());
}
