//! The `ospfsim` command line.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Model;
use crate::engine::{Engine, Verdict};
use crate::explorer::{replay, ExploreConfig, Explorer, Outcome, Property};
use crate::scenario::Scenario;
use crate::trace::{summarize, write_jsonl, TraceEvent};

#[derive(Debug, Parser)]
#[command(
    name = "ospfsim",
    version,
    about = "Run, explore and inspect executable OSPF models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Verdict line only.
    Summary,
    /// Verdict line followed by the trace summary.
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario until it converges or times out.
    Run {
        topology: PathBuf,
        #[arg(long)]
        model: Option<Model>,
        #[arg(long)]
        seed: Option<u64>,
        /// Configuration override, `key=value` (repeatable). `boot=NODE:TICK`
        /// sets one boot offset.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Write the JSONL trace here (`-` for stdout).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "summary")]
        format: Format,
    },
    /// Exhaustively explore the simple model on a small topology.
    Explore {
        topology: PathBuf,
        #[arg(long, default_value_t = 10)]
        queue_bound: usize,
        /// Wrap-around bound for LSA ages (default 2 * (n + 1)).
        #[arg(long)]
        age_bound: Option<u64>,
        #[arg(long, default_value_t = 10)]
        start_interval: u64,
        #[arg(long, default_value_t = 200)]
        depth: u64,
        #[arg(long, default_value_t = 5_000_000)]
        max_states: usize,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        time_limit: Option<u64>,
        #[arg(long, default_value_t = 4)]
        max_nodes: u16,
        /// Extra nondeterministic transmission ticks.
        #[arg(long, default_value_t = 0)]
        spread: u64,
        /// Keep full states and assert that fingerprints never collide.
        #[arg(long)]
        check_collisions: bool,
        /// Where to write the counterexample trace on a violation.
        #[arg(long)]
        counterexample: Option<PathBuf>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Tally a trace written by `run`.
    Summarize {
        /// Trace file (`-` for stdin).
        trace: PathBuf,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

fn is_stdio(p: &std::path::Path) -> bool {
    p.as_os_str() == "-"
}

fn write_trace(
    path: &std::path::Path,
    events: &[TraceEvent],
    out: &mut dyn Write,
) -> io::Result<()> {
    if is_stdio(path) {
        write_jsonl(&mut *out, events)
    } else {
        let mut w = BufWriter::new(File::create(path)?);
        write_jsonl(&mut w, events)?;
        w.flush()
    }
}

/// Runs one command, writing results to `out` and diagnostics to `err`.
/// Returns the process exit status.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Run {
            topology,
            model,
            seed,
            overrides,
            trace,
            format,
        } => cmd_run(topology, model, seed, &overrides, trace, format, out, err),
        Command::Explore {
            topology,
            queue_bound,
            age_bound,
            start_interval,
            depth,
            max_states,
            time_limit,
            max_nodes,
            spread,
            check_collisions,
            counterexample,
            json,
        } => {
            let sc = match Scenario::load(&topology) {
                Ok(sc) => sc,
                Err(e) => {
                    let _ = writeln!(err, "{}: {e}", topology.display());
                    return EXIT_ERROR;
                }
            };
            let mut cfg = ExploreConfig::new(sc.topology);
            cfg.queue_bound = queue_bound;
            if let Some(b) = age_bound {
                cfg.age_bound = b;
            }
            cfg.start_interval = start_interval;
            cfg.depth_bound = depth;
            cfg.max_states = max_states;
            cfg.time_limit = time_limit.map(Duration::from_secs);
            cfg.max_nodes = max_nodes;
            cfg.time_spread = spread;
            cfg.time_sending = sc.config.time_sending;
            cfg.hellointvl = sc.config.timing.hellointvl;
            cfg.rtdeadintvl = sc.config.timing.rtdeadintvl;
            cfg.check_collisions = check_collisions;
            cmd_explore(cfg, counterexample, json, out, err)
        }
        Command::Summarize { trace } => cmd_summarize(trace, out, err),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    topology: PathBuf,
    model: Option<Model>,
    seed: Option<u64>,
    overrides: &[String],
    trace: Option<PathBuf>,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let mut sc = match Scenario::load(&topology) {
        Ok(sc) => sc,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", topology.display());
            return EXIT_ERROR;
        }
    };
    if let Some(m) = model {
        sc.config.model = m;
    }
    if let Some(s) = seed {
        sc.config.seed = s;
    }
    if let Err(e) = sc.apply_overrides(overrides.iter().map(String::as_str)) {
        let _ = writeln!(err, "{e}");
        return EXIT_ERROR;
    }
    let engine = match Engine::new(sc.config, sc.topology) {
        Ok(e) => e,
        Err(e) => {
            let _ = writeln!(err, "invalid configuration: {e}");
            return EXIT_ERROR;
        }
    };
    let res = engine.run();
    if let Some(path) = &trace {
        if let Err(e) = write_trace(path, &res.trace, out) {
            let _ = writeln!(err, "{}: {e}", path.display());
            return EXIT_ERROR;
        }
    }
    let _ = writeln!(out, "{}", res.verdict);
    if format == Format::Full {
        let text = crate::trace::to_jsonl(&res.trace);
        if let Ok(s) = summarize(text.as_bytes()) {
            let _ = write!(out, "{s}");
        }
    }
    match res.verdict {
        Verdict::Converged { .. } => EXIT_OK,
        Verdict::TimedOut { .. } => EXIT_FAIL,
        Verdict::QueueOverflow(_) => EXIT_ERROR,
    }
}

fn property_name(p: Property) -> &'static str {
    match p {
        Property::QueueBound => "queue_bound",
        Property::LsdbInvariant => "lsdb_invariant",
        Property::AgeWindow => "age_window",
        Property::Livelock => "all_paths_converge",
    }
}

fn cmd_explore(
    cfg: ExploreConfig,
    counterexample: Option<PathBuf>,
    json: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let mut ex = match Explorer::new(cfg) {
        Ok(ex) => ex,
        Err(e) => {
            let _ = writeln!(err, "refused: {e}");
            return EXIT_ERROR;
        }
    };
    let r = ex.run();
    if json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&r).unwrap());
    } else {
        let head = match &r.outcome {
            Outcome::Pass => "PASS".to_owned(),
            Outcome::Violation { property, .. } => {
                format!("VIOLATION property={}", property_name(*property))
            }
            Outcome::Inconclusive { frontier, .. } => format!("INCONCLUSIVE frontier={frontier}"),
        };
        let _ = writeln!(
            out,
            "{head} states={} initial={} converged={} transitions={} max_queue={} max_depth={} elapsed_ms={}",
            r.states, r.initial_states, r.converged_states, r.transitions, r.max_queue, r.max_depth, r.elapsed_ms
        );
        let mut checked: Vec<Property> = ex.config.properties.iter().copied().collect();
        checked.push(Property::Livelock);
        let results: Vec<String> = checked
            .iter()
            .map(|p| {
                let status = match &r.outcome {
                    Outcome::Violation { property, .. } if property == p => "violated",
                    Outcome::Pass => "ok",
                    Outcome::Violation { .. } | Outcome::Inconclusive { .. } => "unknown",
                };
                format!("{}={status}", property_name(*p))
            })
            .collect();
        let _ = writeln!(out, "properties: {}", results.join(" "));
        if let Some(l) = r.longest_path {
            let _ = writeln!(out, "longest path to convergence: {l} ticks");
        }
        match &r.outcome {
            Outcome::Violation {
                counterexample: ce,
                detail,
                ..
            } => {
                let _ = writeln!(out, "detail: {detail}");
                let _ = writeln!(
                    out,
                    "counterexample: boot={:?} ticks={}",
                    ce.boot,
                    ce.choices.len()
                );
            }
            Outcome::Inconclusive { reason, .. } => {
                let _ = writeln!(out, "reason: {reason}");
            }
            Outcome::Pass => {}
        }
    }
    match &r.outcome {
        Outcome::Pass => EXIT_OK,
        Outcome::Violation {
            counterexample: ce, ..
        } => {
            if let Some(path) = &counterexample {
                let (_, trace, _) = replay(&ex, ce);
                if let Err(e) = write_trace(path, &trace, out) {
                    let _ = writeln!(err, "{}: {e}", path.display());
                    return EXIT_ERROR;
                }
            }
            EXIT_FAIL
        }
        Outcome::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

fn cmd_summarize(trace: PathBuf, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = if is_stdio(&trace) {
        summarize(io::stdin().lock())
    } else {
        match File::open(&trace) {
            Ok(f) => summarize(BufReader::new(f)),
            Err(e) => {
                let _ = writeln!(err, "{}: {e}", trace.display());
                return EXIT_ERROR;
            }
        }
    };
    match res {
        Ok(s) => {
            let _ = write!(out, "{s}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", trace.display());
            EXIT_ERROR
        }
    }
}

/// Parses `args` (including the program name) and executes the command.
/// Usage errors exit with status 2 after printing clap's message.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, out, err),
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            EXIT_ERROR
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            EXIT_OK
        }
    }
}
