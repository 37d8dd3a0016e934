fn main() {
    std::process::exit(mislearn_cli::main_entry());
}
