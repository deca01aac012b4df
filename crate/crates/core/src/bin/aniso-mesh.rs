fn main() {
    std::process::exit(aniso_mesh::cli::run(std::env::args_os()));
}
