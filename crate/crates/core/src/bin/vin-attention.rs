fn main() {
    std::process::exit(vin_attention::cli::main_with_args(std::env::args_os()));
}
