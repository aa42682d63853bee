use clap::Parser;

fn main() {
    let cli = taukit_cli::config::Cli::parse();
    std::process::exit(taukit_cli::run(cli));
}
