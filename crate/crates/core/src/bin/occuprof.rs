fn main() -> std::process::ExitCode {
    occuprof::cli::main()
}
