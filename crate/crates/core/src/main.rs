fn main() {
    std::process::exit(dkstar::cli::main_entry());
}
