use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use fbchemo_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.config, &cli.out, &cli.overrides()) {
        Ok(Some(summary)) => {
            if let (Some(event), Some(t)) = (summary.event, summary.event_time) {
                println!("{event} at t = {t:.10}");
            }
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let err = Err::<(), _>(e)
                .with_context(|| format!("fbchemo failed with {}", cli.config.display()));
            eprintln!("error: {:#}", err.unwrap_err());
            ExitCode::from(code)
        }
    }
}
