fn main() -> std::process::ExitCode {
    scc_winsor::cli::main_from_env()
}
