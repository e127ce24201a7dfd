use clap::Parser;
use doubling_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(err) = doubling_cli::run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(doubling_cli::exit_code(&err));
    }
}
