use clap::error::ErrorKind;
use clap::Parser;
use ladder_cli::{describe, run, Cli, Command, Outcome};
use serde_json::json;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string().trim() }));
            std::process::exit(2);
        }
    };
    let out = match &cli.command {
        Command::ReproduceFigure(a) => Some(a.output.out.clone()),
        Command::Verify { .. } => None,
        Command::Trajectory(a)
        | Command::Scan(a)
        | Command::Negativity(a)
        | Command::Blp(a)
        | Command::D2(a)
        | Command::Fit(a) => Some(a.output.out.clone()),
    };
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", describe(&outcome, out.as_deref()));
            if let Outcome::Verified { mismatches, .. } = &outcome {
                if !mismatches.is_empty() {
                    std::process::exit(1);
                }
            }
        }
        Err(e) => {
            eprintln!("{}", e.record());
            std::process::exit(e.exit_code());
        }
    }
}
