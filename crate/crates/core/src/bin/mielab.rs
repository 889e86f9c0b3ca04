use clap::Parser;

fn main() {
    std::process::exit(mie_core::cli::main_with(mie_core::cli::Cli::parse()));
}
