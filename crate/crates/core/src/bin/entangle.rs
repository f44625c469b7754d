fn main() {
    std::process::exit(entangle::app::main_with_args(std::env::args_os()));
}
