use clap::Parser;

fn main() {
    let cli = galint::cli::Cli::parse();
    std::process::exit(galint::cli::main_with(cli));
}
