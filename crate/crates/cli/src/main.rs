use clap::Parser;
use metaphase::{configure_threads, execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = configure_threads().and_then(|_| execute(&cli)) {
        eprintln!("metaphase: {e}");
        std::process::exit(e.exit_code());
    }
}
