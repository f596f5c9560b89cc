fn main() {
    std::process::exit(scn_core::cli::main());
}
