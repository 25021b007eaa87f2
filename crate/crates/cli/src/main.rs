//! `ddac`: validate rule documents, replay traces, explain and diff
//! resolutions, and host the playground service.

mod explain;
mod style;

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddac_core::{
    diff_timeline, parse_ruleset, run_trace, validate_ruleset, ChannelKind, Mismatch, RuleSet, Severity, Timeline,
    Trace,
};
use ddac_service::{AppState, Session, DEFAULT_PORT};

use crate::style::Style;

#[derive(Parser)]
#[command(name = "ddac", version, about = "Data-driven animation controller tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a rule document and report diagnostics.
    Validate {
        rules: PathBuf,
        /// Exit with status 1 when any warning is reported.
        #[arg(long)]
        strict: bool,
    },
    /// Replay a trace and print the resolved timeline.
    Run {
        #[command(flatten)]
        input: Input,
        /// Write the timeline here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show how every rule was evaluated at one tick.
    Explain {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        tick: u64,
        #[arg(long, value_parser = parse_channel)]
        channel: Option<ChannelKind>,
    },
    /// Replay a trace and compare it against a golden timeline.
    Diff {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        golden: PathBuf,
        /// Compare winner lists as well as channel values.
        #[arg(long)]
        strict: bool,
        /// Print divergences as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Start the playground service.
    Serve {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
        /// Directory holding the built playground UI.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    trace: PathBuf,
}

fn parse_channel(s: &str) -> Result<ChannelKind, String> {
    s.parse()
        .map_err(|_| format!("expected one of: {}", ChannelKind::ALL.map(|k| k.token()).join(", ")))
}

/// Exit statuses.
enum Failure {
    /// 1: warnings under `--strict`.
    Strict(String),
    /// 2: unreadable or invalid input, I/O failure.
    Input(String),
    /// 3: golden divergence.
    Divergence,
    /// 4: usage error.
    Usage(String),
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_rules(path: &Path) -> Result<RuleSet, Failure> {
    parse_ruleset(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_timeline(input: &Input) -> Result<(RuleSet, Timeline), Failure> {
    let rs = load_rules(&input.rules)?;
    let trace = Trace::from_json(&read(&input.trace)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", input.trace.display())))?;
    let timeline = run_trace(&rs, &trace).map_err(|e| Failure::Input(format!("{}: {e}", input.trace.display())))?;
    Ok((rs, timeline))
}

fn validate(rules: &Path, strict: bool) -> CmdResult {
    let rs = load_rules(rules)?;
    let diags = validate_ruleset(&rs);
    let style = Style::for_stderr();
    for d in &diags {
        let line = d.to_string();
        eprintln!(
            "{}",
            match d.severity {
                Severity::Warn => style.yellow(&line),
                Severity::Info => line,
            }
        );
    }
    let warnings = diags.iter().filter(|d| d.severity == Severity::Warn).count();
    let infos = diags.len() - warnings;
    if strict && warnings > 0 {
        return Err(Failure::Strict(format!("{warnings} warnings (strict)")));
    }
    if infos > 0 {
        println!("OK, {warnings} warnings, {infos} info");
    } else {
        println!("OK, {warnings} warnings");
    }
    Ok(())
}

fn run(input: &Input, out: Option<&Path>) -> CmdResult {
    let (_, timeline) = load_timeline(input)?;
    let bytes = timeline.to_json();
    match out {
        Some(path) => fs::write(path, &bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| Failure::Input(format!("stdout: {e}")))
        }
    }
}

fn explain(input: &Input, tick: u64, channel: Option<ChannelKind>) -> CmdResult {
    let (rs, timeline) = load_timeline(input)?;
    let state = usize::try_from(tick)
        .ok()
        .and_then(|t| timeline.entries.get(t))
        .ok_or_else(|| Failure::Usage(format!("tick {tick} out of range (trace has {} ticks)", timeline.len())))?;
    let channels: Vec<ChannelKind> = channel.map_or_else(|| ChannelKind::ALL.to_vec(), |k| vec![k]);
    print!("{}", explain::render(&rs, state, &channels, Style::for_stdout()));
    Ok(())
}

fn diff(input: &Input, golden: &Path, strict: bool, json: bool) -> CmdResult {
    let (_, actual) = load_timeline(input)?;
    let expected =
        Timeline::from_json(&read(golden)?).map_err(|e| Failure::Input(format!("{}: {e}", golden.display())))?;
    let divergences = match diff_timeline(&actual, &expected, strict) {
        Ok(d) => d,
        Err(e) => {
            if json {
                println!(
                    "{}",
                    serde_json::json!({ "length_mismatch": { "actual": e.actual, "expected": e.expected } })
                );
            } else {
                println!("{e}");
            }
            return Err(Failure::Divergence);
        }
    };
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&divergences).expect("divergences serialize")
        );
    } else if divergences.is_empty() {
        println!("OK, timelines match ({} ticks)", actual.len());
    } else {
        for d in &divergences {
            match &d.mismatch {
                Mismatch::Value { actual, expected } => {
                    println!("tick {} {}: actual {actual}, expected {expected}", d.tick, d.channel)
                }
                Mismatch::Winners { actual, expected } => println!(
                    "tick {} {} winners: actual [{}], expected [{}]",
                    d.tick,
                    d.channel,
                    actual.join(", "),
                    expected.join(", ")
                ),
            }
        }
    }
    if divergences.is_empty() {
        Ok(())
    } else {
        Err(Failure::Divergence)
    }
}

fn serve(rules: &Path, addr: SocketAddr, ui_dir: Option<PathBuf>) -> CmdResult {
    let rs = load_rules(rules)?;
    let mut session = Session::new(rs);
    session.step(1).expect("a single step is always valid");
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Input(format!("runtime: {e}")))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::Input(format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| Failure::Input(e.to_string()))?;
        eprintln!("listening on http://{local}");
        ddac_service::serve(listener, AppState::new(session), ui_dir)
            .await
            .map_err(|e| Failure::Input(format!("server error: {e}")))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Validate { rules, strict } => validate(rules, *strict),
        Command::Run { input, out } => run(input, out.as_deref()),
        Command::Explain { input, tick, channel } => explain(input, *tick, *channel),
        Command::Diff {
            input,
            golden,
            strict,
            json,
        } => diff(input, golden, *strict, *json),
        Command::Serve {
            rules,
            port,
            bind,
            ui_dir,
        } => serve(rules, SocketAddr::new(*bind, *port), ui_dir.clone()),
    };
    let style = Style::for_stderr();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Strict(msg)) => {
            eprintln!("{}", style.red(&format!("error: {msg}")));
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("{}", style.red(&format!("error: {msg}")));
            ExitCode::from(2)
        }
        Err(Failure::Divergence) => ExitCode::from(3),
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", style.red(&format!("error: {msg}")));
            ExitCode::from(4)
        }
    }
}
