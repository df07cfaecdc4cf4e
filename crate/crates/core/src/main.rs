fn main() {
    std::process::exit(tripletboost::cli::main());
}
