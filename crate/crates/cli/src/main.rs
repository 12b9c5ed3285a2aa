use clap::Parser;
use env_logger::Env;

use ddpcr_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if let Some(text) = report.stdout {
                println!("{text}");
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
