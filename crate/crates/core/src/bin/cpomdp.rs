fn main() {
    std::process::exit(cpomdp::cli::run());
}
