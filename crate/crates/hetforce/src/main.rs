fn main() {
    std::process::exit(hetforce::main_with_args(std::env::args_os()));
}
