fn main() {
    std::process::exit(spatial_choice_cli::main_with_args(std::env::args_os()));
}
