use clap::Parser;

fn main() {
    let cli = octoalg::cli::Cli::parse();
    std::process::exit(octoalg::cli::main_with(&cli));
}
