//! `gevo` command-line front end and the HTTP service behind `gevo serve`.

pub mod service;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use gevo_core::document::{self, render_diagnostics};
use gevo_core::dsl;
use gevo_core::{load_text, Engine, Event, LoadError, Model, PropagationTrace, RuleSet, WorkspaceDocument};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NOTHING_EXECUTED: u8 = 3;
pub const EXIT_ABORTED: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "gevo", version, about = "Evolve graph class models with event-condition-action rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a document loads and that every graph is consistent.
    Validate { file: PathBuf },
    /// Dispatch one event and propagate it through the rules.
    Apply {
        file: PathBuf,
        /// Event expression, e.g. `delete-node(C2)`.
        #[arg(long)]
        event: String,
        /// Run the propagation without keeping its result.
        #[arg(long)]
        dry_run: bool,
        /// Print the propagation trace on stdout.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Where to write the resulting document; `.json` selects the JSON form.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print a document in canonical form.
    Fmt { file: PathBuf },
    /// Serve a document over HTTP.
    Serve {
        file: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Committed events kept for undo, per session.
        #[arg(long, default_value_t = service::DEFAULT_UNDO_DEPTH)]
        undo_depth: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// An error together with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: EXIT_USAGE, error: error.into() }
    }

    fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: EXIT_INVALID, error: error.into() }
    }
}

type Outcome = Result<u8, Failure>;

/// Runs the CLI with `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn execute(command: Command) -> Outcome {
    match command {
        Command::Validate { file } => validate(&file),
        Command::Apply { file, event, dry_run, trace, format, output } => {
            apply(&file, &event, dry_run, trace.then_some(format), output.as_deref())
        }
        Command::Fmt { file } => fmt(&file),
        Command::Serve { file, port, host, undo_depth } => serve(&file, SocketAddr::new(host, port), undo_depth),
    }
}

/// Writes to stdout; a closed pipe (`gevo ... | head`) is not an error.
fn out(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(Failure::usage)
}

fn load(path: &Path) -> Result<Model, Failure> {
    let text = read(path)?;
    load_text(&text).map_err(|e| match e {
        LoadError::Json(e) => Failure::invalid(anyhow::anyhow!("{}: {e}", path.display())),
        LoadError::Diagnostics(d) => Failure::invalid(anyhow::anyhow!("{}:\n{}", path.display(), render_diagnostics(&d))),
    })
}

fn validate(path: &Path) -> Outcome {
    let model = load(path)?;
    let ws = &model.state.workspace;
    let violations = ws.validate_all();
    if violations.is_empty() {
        let (g, n, r) = (ws.graphs().count(), ws.nodes().count(), ws.relations().count());
        out(&format!("{}: ok ({g} graphs, {n} nodes, {r} relations)\n", path.display()));
        return Ok(EXIT_OK);
    }
    for v in &violations {
        out(&format!("{}: {v}\n", path.display()));
    }
    Err(Failure::invalid(anyhow::anyhow!("{} violation(s)", violations.len())))
}

/// Parses an event expression and checks its name and arity against the rules.
pub fn parse_event(src: &str, rules: &RuleSet) -> anyhow::Result<Event> {
    let event = dsl::parse_event(src).map_err(|d| anyhow::anyhow!("event `{src}`: {d}"))?;
    check_event(&event, rules)?;
    Ok(event)
}

pub fn check_event(event: &Event, rules: &RuleSet) -> anyhow::Result<()> {
    let spec = rules.event_spec(&event.name).with_context(|| format!("unknown event `{}`", event.name))?;
    anyhow::ensure!(
        spec.arity == event.arity(),
        "event `{}` takes {} argument(s), got {}",
        event.name,
        spec.arity,
        event.arity()
    );
    Ok(())
}

fn write_document(path: &Path, engine: &Engine) -> Result<(), Failure> {
    let state = engine.state();
    let text = if path.extension().is_some_and(|e| e == "json") {
        let doc = WorkspaceDocument::from_state(state, engine.rules());
        serde_json::to_string_pretty(&doc).expect("document serializes") + "\n"
    } else {
        dsl::print_document(&document::state_document(state, engine.rules()))
    };
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display())).map_err(Failure::usage)
}

fn print_trace(trace: &PropagationTrace, format: Format) {
    match format {
        Format::Json => out(&(trace.to_json() + "\n")),
        Format::Text => out(&trace.render_text()),
    }
}

fn apply(path: &Path, event: &str, dry_run: bool, trace: Option<Format>, output: Option<&Path>) -> Outcome {
    let mut engine = load(path)?.into_engine();
    let event = parse_event(event, engine.rules()).map_err(Failure::invalid)?;
    let result = if dry_run { engine.dry_run(&event).map(|(t, _)| t) } else { engine.dispatch(event) };
    match result {
        Ok(t) => {
            if let Some(format) = trace {
                print_trace(&t, format);
            }
            if let Some(out) = output {
                write_document(out, &engine)?;
            }
            let executed = t.executed().count();
            eprintln!("{executed} rule(s) executed, {} trace entries", t.entries.len());
            if executed == 0 {
                let status = t.entries.first().map(|e| e.status.as_str()).unwrap_or("empty");
                eprintln!("nothing executed ({status})");
                return Ok(EXIT_NOTHING_EXECUTED);
            }
            Ok(EXIT_OK)
        }
        Err(aborted) => {
            if let Some(format) = trace {
                print_trace(&aborted.trace, format);
            }
            Err(Failure { code: EXIT_ABORTED, error: aborted.into() })
        }
    }
}

fn fmt(path: &Path) -> Outcome {
    let text = read(path)?;
    let doc = if text.trim_start().starts_with('{') {
        let model = load(path)?;
        document::state_document(&model.state, &model.rules)
    } else {
        dsl::parse_document(&text)
            .map_err(|d| Failure::invalid(anyhow::anyhow!("{}:\n{}", path.display(), render_diagnostics(&d))))?
    };
    out(&dsl::print_document(&doc));
    Ok(EXIT_OK)
}

fn serve(path: &Path, addr: SocketAddr, undo_depth: usize) -> Outcome {
    let model = load(path)?;
    let violations = model.state.workspace.validate_all();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure::invalid(anyhow::anyhow!("{}:\n{}", path.display(), list.join("\n"))));
    }
    let runtime = tokio::runtime::Runtime::new().context("cannot start runtime").map_err(Failure::usage)?;
    runtime
        .block_on(async move {
            let app = service::AppState::new(undo_depth);
            let id = app.insert(model);
            let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot bind {addr}"))?;
            eprintln!("serving {} as session {id} on http://{}", path.display(), listener.local_addr()?);
            axum::serve(listener, service::router(app)).await.context("server failed")
        })
        .map_err(Failure::usage)?;
    Ok(EXIT_OK)
}
