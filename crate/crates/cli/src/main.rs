use std::process::ExitCode;

use clap::Parser;
use msdeconv_cli::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.run() {
        Ok(lines) => {
            if !cli.quiet {
                for l in lines {
                    println!("{l}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("msdeconv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
