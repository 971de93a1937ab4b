fn main() {
    std::process::exit(sssplus_lab::cli::run());
}
