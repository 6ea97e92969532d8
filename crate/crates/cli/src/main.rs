fn main() {
    std::process::exit(codeprompt_cli::run_cli(std::env::args_os()));
}
