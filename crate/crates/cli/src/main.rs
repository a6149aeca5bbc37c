use clap::Parser;

fn main() {
    let cli = rbcompare_cli::Cli::parse();
    std::process::exit(rbcompare_cli::run(cli));
}
