mod args;
mod commands;
mod report;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::Cli;
use report::Report;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut report = Report::new(commands::name(&cli.command), commands::inputs(&cli.command));
    let code = match commands::run(&cli.command) {
        Ok(outcome) => {
            report.outputs = Some(outcome.outputs);
            if outcome.verified {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            report.error = Some(e.to_value());
            e.exit_code()
        }
    };
    if cli.timing {
        report.wall_time_ns = Some(start.elapsed().as_nanos());
    }
    let text = report.to_json();
    print!("{text}");
    if let Some(path) = &cli.out {
        if let Err(e) = fs::write(path, &text) {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
