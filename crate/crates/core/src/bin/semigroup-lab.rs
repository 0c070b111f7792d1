fn main() -> std::process::ExitCode {
    semigroup_lab::cli::main()
}
