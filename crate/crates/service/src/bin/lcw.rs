fn main() {
    std::process::exit(lcw_service::cli::main());
}
