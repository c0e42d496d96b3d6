fn main() -> std::process::ExitCode {
    fcmtune::cli::run()
}
