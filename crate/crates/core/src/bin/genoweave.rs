fn main() {
    std::process::exit(genoweave::cli::main_with_env());
}
