fn main() {
    std::process::exit(mool::cli::main());
}
