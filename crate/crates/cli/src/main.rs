use std::process::ExitCode;

use qrng_cli::{cli, config_from_matches, run};

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let result = config_from_matches(sub).and_then(|config| run(name, &config));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report.render());
            for line in &outcome.report.summary {
                eprintln!("{line}");
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
