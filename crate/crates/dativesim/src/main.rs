fn main() -> std::process::ExitCode {
    dativesim::cli::main_entry()
}
