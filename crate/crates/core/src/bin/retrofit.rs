fn main() {
    std::process::exit(retrofit::cli::main());
}
