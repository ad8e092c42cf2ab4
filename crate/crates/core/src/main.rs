fn main() -> std::process::ExitCode {
    vnls::cli::main()
}
