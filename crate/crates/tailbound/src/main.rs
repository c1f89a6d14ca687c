use tailbound::cli::main_with_args;

fn main() {
    std::process::exit(main_with_args(std::env::args_os()));
}
