use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use superforms_cli::emit::{emit, emit_all, Format};
use superforms_cli::run::{run, Options, Record};
use superforms_cli::suites::run_suite;
use superforms_cli::syntax::parse_script;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

/// Exact computations on supermanifolds: run a script or a built-in check suite.
#[derive(Parser, Debug)]
#[command(name = "superforms", version)]
struct Args {
    /// Script to execute.
    #[arg(long, value_name = "FILE")]
    script: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Truncation order of flows.
    #[arg(long, default_value_t = 8)]
    order: u32,
    /// Seed of the random samplers used by the suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run a built-in suite after the script.
    #[arg(long, value_name = "SUITE")]
    check: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let format = match args.format {
        OutputFormat::Text => Format::Text,
        OutputFormat::Json => Format::Json,
    };
    let opts = Options {
        order: args.order,
        seed: args.seed,
    };
    if args.script.is_none() && args.check.is_empty() {
        eprintln!("error: nothing to do; pass --script FILE or --check SUITE");
        return ExitCode::from(2);
    }
    let mut ok = true;
    if let Some(path) = &args.script {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        };
        let script = match parse_script(&text) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{}:{e}", path.display());
                return ExitCode::FAILURE;
            }
        };
        let outcome = run(&script, &opts);
        print!("{}", emit_all(&outcome.records, format));
        if let Some(e) = &outcome.error {
            eprintln!("{}:{e}", path.display());
        }
        ok &= outcome.success();
    }
    for name in &args.check {
        match run_suite(name, &opts) {
            Ok(report) => {
                ok &= report.passed();
                print!("{}", emit(&Record::Check { line: 0, report }, format));
            }
            Err(e) => {
                eprintln!("error: {e}");
                ok = false;
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
