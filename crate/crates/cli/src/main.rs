use clap::Parser;

fn main() {
    let cli = scamlens_cli::Cli::parse();
    if let Err(err) = scamlens_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(scamlens_cli::exit_code(&err));
    }
}
