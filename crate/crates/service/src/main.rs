fn main() -> std::process::ExitCode {
    musekg_service::cli::main()
}
