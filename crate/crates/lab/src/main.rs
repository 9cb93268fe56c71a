fn main() {
    std::process::exit(dstab::main_with_args(std::env::args_os()));
}
