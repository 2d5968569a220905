fn main() {
    std::process::exit(spgcl::cli::run(std::env::args_os()));
}
