fn main() {
    std::process::exit(spinmer_cli::run_command(std::env::args_os()));
}
