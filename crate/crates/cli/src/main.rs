use clap::Parser;

fn main() {
    std::process::exit(tribody_cli::main_with(tribody_cli::Cli::parse()));
}
