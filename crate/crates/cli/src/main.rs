use clap::Parser;

use twinsep_cli::RunConfig;

fn main() {
    let config = RunConfig::parse();
    match twinsep_cli::run(&config) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
