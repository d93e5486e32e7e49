fn main() -> std::process::ExitCode {
    kslab::cli::run()
}
