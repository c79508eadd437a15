fn main() {
    std::process::exit(qklstm::cli::main_with_args(std::env::args_os()));
}
