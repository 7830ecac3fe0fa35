fn main() -> std::process::ExitCode {
    carveopt::cli::main()
}
