fn main() -> std::process::ExitCode {
    chaosfilter_service::cli::main()
}
