fn main() {
    std::process::exit(covlab::cli::run_from_env());
}
