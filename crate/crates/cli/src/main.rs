//! `cartan5`: reductions, invariants, comparisons, and numeric
//! verification for monic fifth-order linear differential operators.

mod commands;
mod operator;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cartan5_core::problem::Variant;

#[derive(Parser)]
#[command(
    name = "cartan5",
    about = "Equivalence analysis of monic fifth-order linear differential operators on the line",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum VariantArg {
    Direct,
    Gauge,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Direct => Variant::Direct,
            VariantArg::Gauge => Variant::Gauge,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
    Latex,
}

#[derive(Args)]
struct OutputOpts {
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the document to a file instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct SampleOpts {
    /// Seed for the deterministic sample generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of sample points / scenes.
    #[arg(long)]
    samples: Option<usize>,
    /// Numeric values for declared constants: `name=value,...`.
    #[arg(long, value_delimiter = ',')]
    constants: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full reduction and emit the trace.
    Derive {
        #[arg(long, value_enum)]
        variant: VariantArg,
        /// Operator text, e.g. "D^5 + x*D^4 + 1".
        operator: String,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Emit the fundamental invariants of an operator.
    Invariants {
        #[arg(long, value_enum)]
        variant: VariantArg,
        operator: String,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Compare two operators through their invariant fingerprints.
    Compare {
        #[arg(long, value_enum)]
        variant: VariantArg,
        operator1: String,
        operator2: String,
        #[command(flatten)]
        samples: SampleOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Check every derived structure equation numerically.
    Verify {
        #[arg(long, value_enum)]
        variant: VariantArg,
        operator: String,
        #[command(flatten)]
        samples: SampleOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Run the built-in boundary-value example and diff against the
    /// golden invariants.
    Example {
        /// Restrict to one equivalence problem (default: both).
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[command(flatten)]
        output: OutputOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            let record = json!({
                "error": {
                    "kind": err.kind(),
                    "message": err.to_string(),
                }
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
