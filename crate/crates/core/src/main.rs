fn main() {
    std::process::exit(deit::cli_runner::main_entry());
}
