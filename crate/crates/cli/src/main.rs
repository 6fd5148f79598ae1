//! `edgeflow`: check flows, generate manifests, run test sessions, inspect
//! provenance logs and serve the editor API.
//!
//! Exit codes: 0 success, 1 findings (diagnostics at the `--fail-on`
//! threshold, refused runs, incomplete manifest meta), 2 usage or input
//! errors, 3 internal errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use edgeflow_core::check::Severity;
use edgeflow_core::flow::{load_flow, FlowGraph, Registry};
use edgeflow_core::manifest::{build_manifest, serialize_manifest, ManifestError, ManifestMeta};
use edgeflow_core::report::{pretty, to_json, validate, ValidateResponse};
use edgeflow_core::runtime::{lineage, parse_log, start_session, to_json_lines, window, Kind, Lineage, MsgId, RunError, SessionConfig};
use edgeflow_core::taint::badges;
use edgeflow_core::builtin_specs;

#[derive(Parser)]
#[command(name = "edgeflow", version, about = "Privacy-aware flow toolkit")]
struct Cli {
    /// Directory of extra nodespec JSON files.
    #[arg(long, global = true)]
    specs: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FailOn {
    Warn,
    Error,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a flow and report labels and risk.
    Check {
        flow: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long, value_enum, default_value = "error")]
        fail_on: FailOn,
    },
    /// Generate the app manifest.
    Manifest {
        flow: PathBuf,
        /// Description, benefits, purposes and statutory details.
        #[arg(long)]
        meta: PathBuf,
        /// Write here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a test session with mock data.
    Run {
        flow: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Virtual milliseconds.
        #[arg(long, default_value_t = 10_000)]
        duration: u64,
        /// Mock profile for a datasource, as `node=profile name`.
        #[arg(long = "profile", value_parser = parse_profile)]
        profiles: Vec<(String, String)>,
        /// Write the provenance log here.
        #[arg(long)]
        provenance: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Query a provenance log.
    Inspect {
        log: PathBuf,
        /// List this node's records.
        #[arg(long, required_unless_present = "message", conflicts_with = "message")]
        node: Option<String>,
        /// Show this message's lineage (`seed:seq`).
        #[arg(long)]
        message: Option<MsgId>,
        /// Restrict `--node` to virtual times `a..b` (inclusive).
        #[arg(long, requires = "node", value_parser = parse_window)]
        window: Option<(u64, u64)>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Serve the editor API.
    Serve {
        /// Defaults to $PORT, then 8080.
        #[arg(long)]
        port: Option<u16>,
    },
}

fn parse_profile(s: &str) -> Result<(String, String), String> {
    let (node, profile) = s
        .split_once('=')
        .ok_or_else(|| format!("expected `node=profile`, got `{s}`"))?;
    Ok((node.trim().to_string(), profile.trim().to_string()))
}

fn parse_window(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected `a..b`, got `{s}`"))?;
    let n = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((n(a)?, n(b)?))
}

enum Failure {
    /// Already reported on stderr.
    Findings,
    Input(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Findings => 1,
            Failure::Input(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_out(text: &[u8]) -> Outcome {
    let mut out = std::io::stdout().lock();
    out.write_all(text)
        .and_then(|_| out.flush())
        .map_err(|e| Failure::Internal(format!("stdout: {e}")))
}

fn registry(specs: Option<&Path>) -> Result<Registry, Failure> {
    let mut reg = builtin_specs();
    if let Some(dir) = specs {
        reg.load_dir(dir).map_err(|e| Failure::Input(e.to_string()))?;
    }
    Ok(reg)
}

fn load(path: &Path, reg: &Registry) -> Result<FlowGraph, Failure> {
    let bytes = read(path)?;
    load_flow(&bytes, reg).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn check_text(r: &ValidateResponse, flow: &FlowGraph) -> String {
    let mut out = String::new();
    for d in &r.diagnostics {
        out += &format!("{d}\n");
    }
    let errors = r.diagnostics.iter().filter(|d| d.severity == Severity::Error).count();
    let warnings = r.diagnostics.iter().filter(|d| d.severity == Severity::Warning).count();
    out += &format!("{errors} error(s), {warnings} warning(s)\n");
    if !r.labels.0.is_empty() {
        out += "\nwire labels:\n";
        for (wire, label) in &r.labels.0 {
            let b: String = badges(label).into_iter().collect();
            let atoms: Vec<String> = label.iter().map(|a| a.to_string()).collect();
            out += &format!("  {wire} [{b}] {}\n", atoms.join(", "));
        }
    }
    out += &format!("\nrisk: {} of 5 ({}) for {}\n", r.risk.app.score, r.risk.app.band, flow.name);
    for n in &r.risk.nodes {
        out += &format!("  {} {} in [{}, {}]\n", n.id, n.score, n.spectrum.lo, n.spectrum.hi);
    }
    for (node, skeleton) in &r.skeletons {
        out += &format!("\nskeleton for {node}: {skeleton}\n");
    }
    out
}

fn check(reg: &Registry, path: &Path, format: Format, fail_on: FailOn) -> Outcome {
    let flow = load(path, reg)?;
    let r = validate(&flow, reg);
    let text = match format {
        Format::Json => to_json(&r),
        Format::Text => check_text(&r, &flow),
    };
    write_out(text.as_bytes())?;
    let threshold = match fail_on {
        FailOn::Warn => Severity::Warning,
        FailOn::Error => Severity::Error,
    };
    let failing = r.diagnostics.iter().any(|d| match threshold {
        Severity::Warning => matches!(d.severity, Severity::Error | Severity::Warning),
        _ => d.severity == Severity::Error,
    });
    if failing {
        return Err(Failure::Findings);
    }
    Ok(())
}

fn manifest(reg: &Registry, path: &Path, meta: &Path, output: Option<&Path>) -> Outcome {
    let flow = load(path, reg)?;
    let meta: ManifestMeta = serde_json::from_slice(&read(meta)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", meta.display())))?;
    let r = validate(&flow, reg);
    let m = build_manifest(&flow, reg, &r.labels, &r.risk, &meta).map_err(|e| match e {
        ManifestError::MissingStatutoryField(_) => {
            eprintln!("error: {e}");
            Failure::Findings
        }
        ManifestError::Parse { .. } => Failure::Internal(e.to_string()),
    })?;
    let bytes = serialize_manifest(&m);
    match output {
        Some(out) => std::fs::write(out, &bytes).map_err(|e| Failure::Internal(format!("{}: {e}", out.display()))),
        None => write_out(&bytes),
    }
}

fn run(reg: &Registry, path: &Path, config: SessionConfig, provenance: Option<&Path>, format: Format) -> Outcome {
    let flow = load(path, reg)?;
    let result = start_session(&flow, reg, config.clone()).map_err(|e| match e {
        RunError::Refused(diags) => {
            eprintln!("error: {}", RunError::Refused(diags.clone()));
            for d in diags {
                eprintln!("  {d}");
            }
            Failure::Findings
        }
        e => Failure::Input(e.to_string()),
    })?;
    if let Some(out) = provenance {
        std::fs::write(out, to_json_lines(&result.log))
            .map_err(|e| Failure::Internal(format!("{}: {e}", out.display())))?;
    }
    let summary = result.summary(&flow, reg, &config);
    let text = match format {
        Format::Json => pretty(&summary),
        Format::Text => {
            let mut s = format!(
                "seed {}, {} ms: {} record(s), {} fault(s)\n",
                summary.seed, summary.duration, summary.records, summary.faults
            );
            for (node, n) in &summary.outputs {
                s += &format!("output {node}: {n} message(s)\n");
            }
            for (node, n) in &summary.firings {
                s += &format!("trigger {node}: {n} firing(s)\n");
            }
            s
        }
    };
    write_out(text.as_bytes())
}

fn lineage_text(l: &Lineage, depth: usize, out: &mut String) {
    out.push_str(&format!(
        "{:indent$}{} {}:{} t={} {}\n",
        "",
        l.msg,
        l.node,
        l.port,
        l.t,
        l.payload,
        indent = depth * 2
    ));
    for p in &l.parents {
        lineage_text(p, depth + 1, out);
    }
}

fn inspect(path: &Path, node: Option<&str>, message: Option<MsgId>, range: Option<(u64, u64)>, format: Format) -> Outcome {
    let text = String::from_utf8(read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let log = parse_log(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let bad = |e: edgeflow_core::runtime::InspectError| Failure::Input(e.to_string());
    let out = match (node, message) {
        (_, Some(id)) => {
            let l = lineage(&log, id).map_err(bad)?;
            match format {
                Format::Json => pretty(&l),
                Format::Text => {
                    let mut s = String::new();
                    lineage_text(&l, 0, &mut s);
                    s
                }
            }
        }
        (Some(node), None) => {
            let (from, to) = range.unwrap_or((0, u64::MAX));
            let records = window(&log, node, from, to).map_err(bad)?;
            match format {
                Format::Json => pretty(&records),
                Format::Text => {
                    let mut s = String::new();
                    for r in &records {
                        let kind = match r.kind {
                            Kind::Emit => "emit",
                            Kind::Consume => "consume",
                            Kind::Fault => "fault",
                        };
                        s += &format!("t={} {kind} {} {}:{} {}\n", r.t, r.msg, r.node, r.port, r.payload);
                    }
                    s += &format!("{} record(s)\n", records.len());
                    s
                }
            }
        }
        (None, None) => unreachable!("clap requires --node or --message"),
    };
    write_out(out.as_bytes())
}

fn serve(reg: Registry, port: Option<u16>) -> Outcome {
    let port = match port {
        Some(p) => p,
        None => match std::env::var("PORT") {
            Ok(v) => v.parse().map_err(|e| Failure::Input(format!("PORT `{v}`: {e}")))?,
            Err(_) => 8080,
        },
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
            .await
            .map_err(|e| Failure::Internal(format!("cannot listen on port {port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| Failure::Internal(e.to_string()))?;
        // Install the handler before announcing the address, so an early
        // interrupt still shuts down cleanly.
        let shutdown = interrupted().map_err(|e| Failure::Internal(format!("signal handler: {e}")))?;
        write_out(format!("listening on http://{addr}\n").as_bytes())?;
        let state = edgeflow_server::AppState::new(reg);
        edgeflow_server::serve(listener, state, shutdown)
            .await
            .map_err(|e| Failure::Internal(e.to_string()))
    })
}

#[cfg(unix)]
fn interrupted() -> std::io::Result<impl std::future::Future<Output = ()>> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut int = signal(SignalKind::interrupt())?;
    let mut term = signal(SignalKind::terminate())?;
    Ok(async move {
        tokio::select! {
            _ = int.recv() => {}
            _ = term.recv() => {}
        }
    })
}

#[cfg(not(unix))]
fn interrupted() -> std::io::Result<impl std::future::Future<Output = ()>> {
    Ok(async {
        let _ = tokio::signal::ctrl_c().await;
    })
}

fn dispatch(cli: Cli) -> Outcome {
    let reg = registry(cli.specs.as_deref())?;
    match cli.command {
        Command::Check { flow, format, fail_on } => check(&reg, &flow, format, fail_on),
        Command::Manifest { flow, meta, output } => manifest(&reg, &flow, &meta, output.as_deref()),
        Command::Run {
            flow,
            seed,
            duration,
            profiles,
            provenance,
            format,
        } => {
            let config = SessionConfig {
                seed,
                duration,
                profiles: profiles.into_iter().collect(),
            };
            run(&reg, &flow, config, provenance.as_deref(), format)
        }
        Command::Inspect {
            log,
            node,
            message,
            window,
            format,
        } => inspect(&log, node.as_deref(), message, window, format),
        Command::Serve { port } => serve(reg, port),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Findings => {}
                Failure::Input(m) | Failure::Internal(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
