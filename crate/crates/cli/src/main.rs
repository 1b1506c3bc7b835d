use clap::Parser;

fn main() {
    let cli = robustmo_cli::Cli::parse();
    std::process::exit(robustmo_cli::run(cli));
}
