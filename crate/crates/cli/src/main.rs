use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use girsanov_gate::error::ExitLabel;
use girsanov_gate::{exit, explain, parse_config, render, render_catalog, render_text, run_experiment, write_atomic};

/// Classify a stochastic exponential as a UI martingale, a martingale or a
/// strict local martingale by Monte Carlo.
#[derive(Debug, Parser)]
#[command(name = "girsanov-gate", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Experiment file (flat `key=value` lines).
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the scenario catalog.
    List,
    /// Show the metadata and defaults of one scenario.
    Explain { scenario: String },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(u8::try_from(c).unwrap_or(1))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { code(exit::CONFIG) } else { code(exit::SUCCESS) };
        }
    };

    match (cli.command, cli.config) {
        (Some(Command::List), _) => {
            print!("{}", render_catalog());
            code(exit::SUCCESS)
        }
        (Some(Command::Explain { scenario }), _) => match explain(&scenario) {
            Ok(s) => {
                print!("{s}");
                code(exit::SUCCESS)
            }
            Err(e) => {
                eprintln!("girsanov-gate: {e}");
                code(e.exit_code())
            }
        },
        (None, Some(path)) => run(&path),
        (None, None) => {
            eprintln!("girsanov-gate: expected a config file, `list` or `explain <scenario>` (see --help)");
            code(exit::CONFIG)
        }
    }
}

fn run(path: &std::path::Path) -> ExitCode {
    let cfg = match parse_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("girsanov-gate: {}: {e}", path.display());
            return code(e.exit_code());
        }
    };
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            let c = e.exit_code();
            eprintln!("girsanov-gate: {e} ({})", ExitLabel(c));
            return code(c);
        }
    };
    match &cfg.output_path {
        Some(out) => {
            if let Err(e) = write_atomic(out, &render(&report, cfg.output_format)) {
                eprintln!("girsanov-gate: {e}");
                return code(e.exit_code());
            }
            print!("{}", render_text(&report));
        }
        None => print!("{}", render(&report, cfg.output_format)),
    }
    code(report.exit_code())
}
