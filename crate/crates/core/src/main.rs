fn main() {
    std::process::exit(lightcone::cli::main());
}
