fn main() {
    std::process::exit(fermitensor::cli::run());
}
