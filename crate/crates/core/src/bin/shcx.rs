use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use shared_constructions::analysis::process_corpus;
use shared_constructions::bundle::{parse_corpus, read_corpus, write_corpus, BundleError};
use shared_constructions::corpus::validate;
use shared_constructions::pipeline::{run_pipeline, write_extraction, PipelineConfig, PipelineError, Summary};
use shared_constructions::pseudo::{build_pseudo_corpus, PseudoError};
use shared_constructions::report::render;
use shared_constructions::synth::{generate, write_synthetic, ConfigError, GeneratorConfig};

/// Shared lemmatised constructions in referential-communication dialogues.
#[derive(Parser)]
#[command(name = "shcx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus bundle and print the violations as JSON.
    Validate { bundle: PathBuf },
    /// Write extraction.ndj and types.ndj for a bundle.
    Extract {
        bundle: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build a pseudo-pair control bundle.
    Pseudo {
        bundle: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run analyses and write a report directory.
    Analyze {
        bundle: PathBuf,
        /// Comma-separated analysis numbers.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        which: Vec<u8>,
        /// Also analyse a pseudo-pair corpus.
        #[arg(long)]
        pseudo: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate a synthetic bundle from a TOML config.
    Synth {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print a report directory's summary.
    Report {
        dir: PathBuf,
        /// Add a table of published headline values.
        #[arg(long)]
        compare: bool,
    },
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { bundle } => {
            let corpus = read_corpus(&bundle)?;
            let report = validate(&corpus);
            let out = json!({ "valid": report.is_valid(), "violations": report.violations });
            println!("{}", serde_json::to_string_pretty(&out)?);
            return Ok(if report.is_valid() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Extract { bundle, output } => {
            let corpus = parse_corpus(&bundle)?;
            write_extraction(&process_corpus(&corpus), &output)?;
        }
        Command::Pseudo { bundle, seed, output } => {
            let corpus = parse_corpus(&bundle)?;
            let pseudo = build_pseudo_corpus(&corpus, seed)?;
            write_corpus(&pseudo, &output)?;
        }
        Command::Analyze {
            bundle,
            which,
            pseudo,
            seed,
            output,
        } => {
            let cfg = PipelineConfig {
                corpus: bundle,
                output,
                seed,
                analyses: which.into_iter().collect::<BTreeSet<u8>>(),
                pseudo,
            };
            run_pipeline(&cfg)?;
        }
        Command::Synth { config, output } => {
            let cfg = GeneratorConfig::load(&config)?;
            let (corpus, truth) = generate(&cfg)?;
            write_synthetic(&corpus, &truth, &output).with_context(|| format!("writing {}", output.display()))?;
        }
        Command::Report { dir, compare } => {
            let summary = Summary::load(&dir)?;
            print!("{}", render(&summary, compare));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn error_json(err: &anyhow::Error) -> serde_json::Value {
    let mut kind = "error";
    let mut extra = serde_json::Value::Null;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<BundleError>() {
            kind = e.kind();
            if let BundleError::Invalid(report) = e {
                extra = json!(report.violations);
            }
            break;
        }
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            kind = e.kind();
            if let PipelineError::Bundle(BundleError::Invalid(report)) = e {
                extra = json!(report.violations);
            }
            break;
        }
        if cause.downcast_ref::<ConfigError>().is_some() {
            kind = "invalid_config";
            break;
        }
        if cause.downcast_ref::<PseudoError>().is_some() {
            kind = "pseudo_pairs";
            break;
        }
    }
    let mut body = json!({ "kind": kind, "message": format!("{err:#}") });
    if !extra.is_null() {
        body["violations"] = extra;
    }
    json!({ "error": body })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = json!({ "error": { "kind": "usage", "message": e.to_string().trim_end() } });
            eprintln!("{body}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::from(1)
        }
    }
}
