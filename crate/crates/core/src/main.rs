use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use warpcheck::config::{builtin, CaseId, VerifyConfig, BUILTIN_NAMES};
use warpcheck::verify::{render, run_suite, Format, RunOptions};
use warpcheck::Error;

#[derive(Parser)]
#[command(
    name = "warpcheck",
    version,
    about = "Oracle verification of closed forms on doubly warped products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a configuration and compare every closed form with the oracle.
    Verify {
        /// JSON config file, or the name of a built-in configuration.
        #[arg(long)]
        config: String,
        /// Comma-separated case ids or `all`; overrides the cases listed in the config.
        #[arg(long)]
        case: Option<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Relative tolerance for map fields.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 4)]
        jet_order: usize,
        /// Start from the formulas as printed and walk the correction catalog.
        #[arg(long)]
        printed_forms: bool,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
    },
    /// Print a built-in configuration as JSON.
    Config {
        /// One of CFG-A, CFG-B, CFG-C, CFG-SWAP, CFG-C-SWAP, CFG-POLY.
        name: String,
    },
}

fn load(config: &str) -> Result<VerifyConfig, Error> {
    let path = Path::new(config);
    if path.exists() || !BUILTIN_NAMES.contains(&config) {
        VerifyConfig::load(path)
    } else {
        builtin(config)
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Config { name } => {
            println!("{}", builtin(&name)?.to_json());
            Ok(0)
        }
        Command::Verify {
            config,
            case,
            samples,
            seed,
            tol,
            jet_order,
            printed_forms,
            report,
            format,
        } => {
            let mut cfg = load(&config)?;
            if let Some(t) = tol {
                cfg.tolerances.rel = t;
            }
            let mut setup = cfg.build()?;
            if let Some(c) = case {
                setup.cases = CaseId::parse_list(&c)?;
            }
            let opts = RunOptions {
                samples,
                seed,
                jet_order,
                printed_forms,
            };
            let result = run_suite(&setup, opts)?;
            let format = match format {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
                FormatArg::Text => Format::Text,
            };
            let text = render(&result, format);
            match report {
                Some(path) => std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(result.exit_code)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
