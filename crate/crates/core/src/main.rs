fn main() {
    env_logger::init();
    std::process::exit(primsketch::cli::run(std::env::args_os()));
}
