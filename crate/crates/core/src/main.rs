fn main() {
    std::process::exit(hmvf::cli::main_with_args(std::env::args_os()));
}
