fn main() -> std::process::ExitCode {
    latcoh::cli::main()
}
