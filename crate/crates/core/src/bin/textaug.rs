fn main() {
    env_logger::init();
    std::process::exit(textaug::cli::run(std::env::args_os()));
}
