//! Command-line surface: `validate`, `simulate`, `export-network`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::content::{OpenAiCompatibleBackend, StubBackend, TextBackend};
use crate::emit::{emit_run, network_from_records, read_ndjson, write_edges_csv};
use crate::engine::Engine;
use crate::parallel::Execution;
use crate::scenario::{parse_scenario, ScenarioError, ScenarioSpec};
use crate::validate::{validate, Severity, ValidationIssue, ValidationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "socsim", version, about = "Scenario-driven synthetic social media simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Stub,
    OpenaiCompatible,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario file and print its report.
    Validate {
        scenario: PathBuf,
        /// Print issues as JSON lines.
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario and write posts, edges, manifest and log.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = BackendKind::Stub)]
        backend: BackendKind,
        /// Base URL of a chat-completion server.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        /// Environment variable holding the API key.
        #[arg(long)]
        api_key_env: Option<String>,
        /// Request timeout in seconds for the HTTP backend.
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
        /// JSON file with `activation`, `attachment` and `content` blocks.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run every stage on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Rebuild the edge list from an emitted NDJSON file.
    ExportNetwork {
        ndjson: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn format_issue(i: &ValidationIssue) -> String {
    let sev = match i.severity {
        Severity::Error => "error",
        Severity::Warning => "warning",
    };
    let code = serde_json::to_value(i.code).expect("code serializes");
    format!(
        "{sev}[{}] {}: {}",
        code.as_str().unwrap_or_default(),
        i.location,
        i.message
    )
}

fn print_report(report: &ValidationReport, json: bool) {
    if json {
        print!("{}", report.to_json_lines());
        return;
    }
    for i in &report.issues {
        println!("{}", format_issue(i));
    }
    println!(
        "{} error(s), {} warning(s)",
        report.errors().count(),
        report.warnings().count()
    );
}

fn load(path: &Path) -> Result<ScenarioSpec, i32> {
    parse_scenario(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        match e {
            ScenarioError::Io { .. } => EXIT_RUNTIME,
            _ => EXIT_INVALID,
        }
    })
}

/// Runs the CLI with explicit arguments (first item is the program name)
/// and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Validate { scenario, json } => {
            let spec = match load(&scenario) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let report = validate(&spec);
            print_report(&report, json);
            if report.has_errors() {
                EXIT_INVALID
            } else {
                EXIT_OK
            }
        }
        Command::Simulate {
            scenario,
            seed,
            out,
            backend,
            endpoint,
            model,
            api_key_env,
            timeout_secs,
            config,
            sequential,
        } => {
            let spec = match load(&scenario) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let report = validate(&spec);
            if report.has_errors() {
                print_report(&report, false);
                return EXIT_INVALID;
            }
            let cfg = match config.as_deref().map(RunConfig::load).transpose() {
                Ok(c) => c.unwrap_or_default(),
                Err(e) => {
                    eprintln!("config: {e}");
                    return match e {
                        crate::config::ConfigError::Io { .. } => EXIT_RUNTIME,
                        _ => EXIT_INVALID,
                    };
                }
            };
            let backend: Box<dyn TextBackend> = match backend {
                BackendKind::Stub => Box::new(StubBackend),
                BackendKind::OpenaiCompatible => {
                    let (Some(endpoint), Some(model)) = (endpoint, model) else {
                        eprintln!("--backend openai-compatible needs --endpoint and --model");
                        return EXIT_USAGE;
                    };
                    let key = match api_key_env {
                        None => None,
                        Some(var) => match std::env::var(&var) {
                            Ok(k) => Some(k),
                            Err(_) => {
                                eprintln!("environment variable {var} is not set");
                                return EXIT_USAGE;
                            }
                        },
                    };
                    Box::new(OpenAiCompatibleBackend::new(
                        &endpoint,
                        &model,
                        key,
                        Duration::from_secs(timeout_secs),
                    ))
                }
            };
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            let run = match Engine::new(&spec, &cfg, backend.as_ref(), seed)
                .with_execution(exec)
                .run()
            {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("simulation failed: {e}");
                    return EXIT_RUNTIME;
                }
            };
            match emit_run(&spec, &run, seed, backend.name(), cfg.content_hash(), &out) {
                Ok(m) => {
                    println!(
                        "wrote {} posts and {} edges to {}",
                        m.posts_total,
                        m.edges,
                        out.display()
                    );
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("{e}");
                    EXIT_RUNTIME
                }
            }
        }
        Command::ExportNetwork { ndjson, out } => {
            let records = match read_ndjson(&ndjson) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_RUNTIME;
                }
            };
            let edges = network_from_records(&records);
            let written = File::create(&out).and_then(|f| {
                let mut w = BufWriter::new(f);
                write_edges_csv(&edges, &mut w)?;
                w.flush()
            });
            match written {
                Ok(()) => {
                    println!("wrote {} edges to {}", edges.len(), out.display());
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("{}: {e}", out.display());
                    EXIT_RUNTIME
                }
            }
        }
    }
}
