fn main() {
    std::process::exit(minbrain::cli::main(std::env::args_os()));
}
