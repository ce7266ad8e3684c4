use clap::Parser;
use cleandb::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("cleandb: error: {e}");
        std::process::exit(e.exit_code());
    }
}
