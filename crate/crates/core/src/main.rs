fn main() -> std::process::ExitCode {
    hardylab::harness::cli::main_entry()
}
