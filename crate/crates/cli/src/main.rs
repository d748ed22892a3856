use clap::Parser;
use qalab_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("qalab: {e}");
        std::process::exit(e.exit_code());
    }
}
