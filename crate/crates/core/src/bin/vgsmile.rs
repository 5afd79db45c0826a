fn main() {
    std::process::exit(vgsmile::cli::run(std::env::args_os()));
}
