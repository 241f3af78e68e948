use clap::Parser;
use svmix_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("svmix: {e}");
        std::process::exit(e.exit_code());
    }
}
