use std::io::Write;

use clap::Parser;

use kinproj::cli::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KINPROJ_LOG", "info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(out) => {
            if !out.is_empty() {
                // a closed pipe (e.g. `| head`) is not an error
                let _ = writeln!(std::io::stdout().lock(), "{}", out.trim_end());
            }
        }
        Err(e) => {
            log::error!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
