fn main() {
    std::process::exit(texwet::run());
}
