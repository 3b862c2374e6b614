use clap::Parser;

fn main() {
    let cli = kt_cli::Cli::parse();
    if let Err(err) = kt_cli::run(cli) {
        eprintln!("ktrace: {err}");
        std::process::exit(err.exit_code());
    }
}
