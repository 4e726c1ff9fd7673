use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpeng::{Error, Result};
use fpeng_cli::commands::{
    cmd_complete, cmd_demo_episodic, cmd_demo_sensorimotor, cmd_export_dot, cmd_render, cmd_stats, cmd_train, Selector,
};
use fpeng_cli::config::{DatasetConfig, RunConfig};
use fpeng_cli::{exit_code, EXIT_NO_MATCH};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fpeng", version, about = "Train, query and inspect footprint memories")]
struct Cli {
    /// JSON run configuration; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream an IDX image file through the configured model.
    Train {
        /// IDX image file (optionally gzipped).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Matching IDX label file.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Keep only samples with this label; repeatable.
        #[arg(long = "class")]
        classes: Vec<u8>,
        /// Cap on samples read.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Write footprints as PGM images.
    Render {
        #[arg(long)]
        model: PathBuf,
        /// `[node:]cell[.footprint]`; all footprints of the cell without `.footprint`.
        #[arg(long, default_value = "0")]
        select: Selector,
    },
    /// Write cluster trees as Graphviz DOT.
    ExportDot {
        #[arg(long)]
        model: PathBuf,
        /// Metacluster node to export; all nodes by default.
        #[arg(long)]
        node: Option<String>,
    },
    /// Train and evaluate the image + sound -> motor agent.
    DemoSensorimotor,
    /// Compare reactive and episodic agents on the two-context corpus.
    DemoEpisodic,
    /// Summarize a model file.
    Stats {
        #[arg(long)]
        model: PathBuf,
    },
    /// Fill in one channel of a metacluster from the others.
    Complete {
        #[arg(long)]
        model: PathBuf,
        /// `channel=value`: a symbol index, a PGM path or comma-separated values.
        #[arg(long = "input", value_parser = parse_input)]
        inputs: Vec<(String, String)>,
        #[arg(long)]
        target: String,
    },
}

fn parse_input(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected name=value, got `{s}`"))
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    emit(&serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?)
}

fn print_paths(paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        emit(&p.display().to_string())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    match cli.command {
        Command::Train {
            dataset,
            labels,
            classes,
            limit,
        } => {
            if let Some(images) = dataset {
                let ds = cfg.dataset.get_or_insert(DatasetConfig {
                    images: images.clone(),
                    labels: None,
                    limit: Some(10_000),
                    classes: None,
                });
                ds.images = images;
            }
            if let Some(ds) = cfg.dataset.as_mut() {
                if labels.is_some() {
                    ds.labels = labels;
                }
                if !classes.is_empty() {
                    ds.classes = Some(classes);
                }
                if limit.is_some() {
                    ds.limit = limit;
                }
            }
            let outcome = cmd_train(&cfg)?;
            print_json(&outcome.stats)?;
        }
        Command::Render { model, select } => print_paths(&cmd_render(&model, &select, &cfg.out)?)?,
        Command::ExportDot { model, node } => print_paths(&cmd_export_dot(&model, node.as_deref(), &cfg.out)?)?,
        Command::DemoSensorimotor => {
            let report = cmd_demo_sensorimotor(&cfg)?;
            print_json(&report)?;
            if report.no_match {
                return Ok(EXIT_NO_MATCH);
            }
        }
        Command::DemoEpisodic => print_json(&cmd_demo_episodic(&cfg)?)?,
        Command::Stats { model } => print_json(&cmd_stats(&model, &cfg.out)?)?,
        Command::Complete { model, inputs, target } => print_json(&cmd_complete(&model, &inputs, &target, &cfg.out)?)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
