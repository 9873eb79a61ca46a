mod config;
mod synth;
mod table;
mod validate;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use connprof_core::stats::Aggregation;
use connprof_core::store::{Artifact, Project};
use connprof_core::{defaults, Granularity};
use connprof_service::{build_reports, compare_groups, EvalService, ReportView};

#[derive(Parser)]
#[command(name = "connprof", version, about = "Connectivity-profile evaluation of translated texts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check inventories, dialog trees and documents.
    Validate {
        paths: Vec<PathBuf>,
        /// Also check the built-in inventory and dialog tree.
        #[arg(long)]
        builtin: bool,
    },
    /// Add configuration files to a project, creating it if needed.
    Import {
        #[arg(long)]
        project: PathBuf,
        /// Also install the built-in inventory and dialog tree.
        #[arg(long)]
        defaults: bool,
        paths: Vec<PathBuf>,
    },
    /// Serve the evaluation API.
    Serve {
        #[arg(long)]
        project: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Agreement report per document, or pooled over aligned documents.
    Report {
        #[arg(long)]
        project: PathBuf,
        /// Comma-separated document ids. Repeat for several pooled columns.
        #[arg(long)]
        docs: Vec<String>,
        #[arg(long, default_value = "category")]
        granularity: Granularity,
        #[arg(long)]
        pooled: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long, default_value = "pair_mean")]
        aggregation: Aggregation,
        /// Decimals in table cells.
        #[arg(long, default_value_t = 2)]
        precision: usize,
    },
    /// Mode agreement between the evaluator groups of two aligned documents.
    Compare {
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        group_a: String,
        #[arg(long)]
        group_b: String,
        #[arg(long, default_value = "category")]
        granularity: Granularity,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long, default_value_t = 2)]
        precision: usize,
    },
    /// Generate documents and complete sessions from a frequency recipe.
    Synthesize {
        #[arg(long)]
        project: PathBuf,
        /// Recipe JSON file; defaults apply to every omitted field.
        #[arg(long)]
        recipe: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the equivalent API requests as JSON lines.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn open(project: &PathBuf) -> Result<Project> {
    Project::open(project).with_context(|| format!("opening project {}", project.display()))
}

fn split_docs(docs: &[String]) -> Vec<Vec<String>> {
    docs.iter()
        .map(|d| d.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect())
        .collect()
}

fn run(command: Command) -> Result<u8> {
    let mut stdout = std::io::stdout().lock();
    match command {
        Command::Validate { paths, builtin } => {
            let outcome = validate::run(&paths, builtin, &mut stdout)?;
            Ok(outcome.exit_code())
        }
        Command::Import {
            project,
            defaults: with_defaults,
            paths,
        } => {
            let p = Project::open_or_create(&project)?;
            let mut artifacts = Vec::new();
            if with_defaults {
                artifacts.push(Artifact::Inventory(defaults::inventory()));
                artifacts.push(Artifact::DialogTree(defaults::dialog_tree()));
            }
            for path in config::expand(&paths) {
                match config::load(&path) {
                    Ok(a) => artifacts.push(a),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return Ok(2);
                    }
                }
            }
            // inventories before the trees that refer to them
            artifacts.sort_by_key(|a| match a {
                Artifact::Inventory(_) => 0,
                Artifact::DialogTree(_) => 1,
                Artifact::Document(_) => 2,
            });
            for a in &artifacts {
                let id = p.put_artifact(a)?;
                writeln!(stdout, "imported {} '{id}'", config::kind_name(a))?;
            }
            Ok(0)
        }
        Command::Serve { project, port, host } => {
            let p = Arc::new(open(&project)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port))
                    .await
                    .with_context(|| format!("binding {host}:{port}"))?;
                writeln!(stdout, "listening on http://{}", listener.local_addr()?)?;
                stdout.flush()?;
                drop(stdout);
                connprof_service::http::serve(listener, Arc::new(EvalService::new(p))).await?;
                Ok(0)
            })
        }
        Command::Report {
            project,
            docs,
            granularity,
            pooled,
            format,
            aggregation,
            precision,
        } => {
            let p = open(&project)?;
            let groups = split_docs(&docs);
            let mut views: Vec<ReportView> = Vec::new();
            if pooled && !groups.is_empty() {
                for g in &groups {
                    views.extend(build_reports(&p, g, granularity, true, aggregation)?);
                }
            } else {
                let all: Vec<String> = groups.concat();
                views = build_reports(&p, &all, granularity, pooled, aggregation)?;
            }
            match format {
                Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&views)?)?,
                Format::Table => write!(stdout, "{}", table::reports(&views, precision))?,
            }
            Ok(0)
        }
        Command::Compare {
            project,
            group_a,
            group_b,
            granularity,
            format,
            precision,
        } => {
            let p = open(&project)?;
            let c = compare_groups(&p, &group_a, &group_b, granularity, Aggregation::default())?;
            match format {
                Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&c)?)?,
                Format::Table => write!(stdout, "{}", table::comparison(&c, precision))?,
            }
            Ok(0)
        }
        Command::Synthesize {
            project,
            recipe,
            seed,
            record,
        } => {
            let recipe: synth::Recipe = match recipe {
                Some(path) => {
                    let text = match fs::read_to_string(&path) {
                        Ok(t) => t,
                        Err(e) => {
                            eprintln!("error: {}: cannot read: {e}", path.display());
                            return Ok(2);
                        }
                    };
                    serde_json::from_str(&text).with_context(|| format!("parsing recipe {}", path.display()))?
                }
                None => serde_json::from_str("{}")?,
            };
            let p = Arc::new(Project::open_or_create(&project)?);
            let rt = tokio::runtime::Runtime::new()?;
            let summary = rt.block_on(synth::synthesize(p, &recipe, seed))?;
            if let Some(path) = record {
                let mut lines = String::new();
                for r in &summary.requests {
                    lines.push_str(&serde_json::to_string(r)?);
                    lines.push('\n');
                }
                fs::write(&path, lines).with_context(|| format!("writing {}", path.display()))?;
                writeln!(stdout, "recorded {} requests to {}", summary.requests.len(), path.display())?;
            }
            writeln!(
                stdout,
                "synthesized {} sessions over {} documents",
                summary.sessions,
                recipe.documents.len()
            )?;
            Ok(0)
        }
    }
}
