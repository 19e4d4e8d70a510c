//! `flowmine` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use flowmine::ablation::AblationMode;
use flowmine::export;
use flowmine::graph::DEFAULT_PATH_CAP;
use flowmine::pipeline::{mine, MineOptions};
use flowmine::synth::{builtin_flows, builtin_roles, generate, GenerateMode, GenerateOptions, Profile};
use flowmine::trace::render_trace;
use flowmine::{Error, MessageRoleConfig, TraceSet};

#[derive(Parser)]
#[command(name = "flowmine", version, about = "Mine message flows from interleaved communication traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace with ground truth.
    Generate(GenerateArgs),
    /// Mine flows from traces and evaluate them.
    Mine(MineArgs),
    /// Summarize a mining report.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "small")]
    profile: Profile,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "random_interleave")]
    mode: GenerateMode,
    /// Maximum number of instances in flight (default: all).
    #[arg(long)]
    max_active: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct MineArgs {
    /// Trace files, one trace per file.
    #[arg(long, required = true, num_args = 1..)]
    traces: Vec<PathBuf>,
    /// JSON file with `initial` and `terminal` message lists.
    #[arg(long)]
    roles: PathBuf,
    #[arg(long)]
    ablate: Option<AblationMode>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write causality.dot and model.dot.
    #[arg(long)]
    dot: bool,
    /// Also write patterns.json.
    #[arg(long)]
    patterns: bool,
    #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
    path_cap: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json written by `mine`.
    report: PathBuf,
    /// Also write histogram.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Roles(_)
            | Error::MissingInitial(_)
            | Error::MissingTerminal(_)
            | Error::NoInstances
            | Error::NoFlows
            | Error::FlowSpec { .. }
            | Error::InvalidMessage(_) => Failure::Usage(e.into()),
            _ => Failure::Data(e.into()),
        }
    }
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Mine(a) => cmd_mine(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(data)
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(usage)
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let flows = builtin_flows(a.profile);
    let opts = GenerateOptions {
        instances: a.instances,
        seed: a.seed,
        mode: a.mode,
        max_active: a.max_active,
    };
    let g = generate(&flows, &opts)?;
    create_dir(&a.out)?;
    write(&a.out, "trace.txt", &render_trace(g.trace(), &g.set.alphabet))?;
    write(&a.out, "ground_truth.jsonl", &g.truth.to_jsonl())?;
    write(&a.out, "roles.json", &json(&builtin_roles(&flows)))?;
    println!("messages: {}", g.trace().len());
    Ok(())
}

fn load_traces(paths: &[PathBuf]) -> Result<TraceSet, Failure> {
    let mut set = TraceSet::new();
    for p in paths {
        let text = fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))
            .map_err(data)?;
        set.parse_and_push(&text, &p.display().to_string())
            .with_context(|| format!("parsing {}", p.display()))
            .map_err(data)?;
    }
    Ok(set)
}

fn load_roles(path: &Path) -> Result<MessageRoleConfig, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    MessageRoleConfig::from_json(&text)
        .with_context(|| format!("roles file {}", path.display()))
        .map_err(usage)
}

fn cmd_mine(a: MineArgs) -> Result<(), Failure> {
    if a.path_cap == 0 {
        return Err(usage(anyhow!("--path-cap must be positive")));
    }
    let cfg = load_roles(&a.roles)?;
    let set = load_traces(&a.traces)?;
    let start = Instant::now();
    let run = mine(
        &set,
        &cfg,
        &MineOptions {
            path_cap: a.path_cap,
            ablation: a.ablate,
        },
    )?;
    let elapsed = start.elapsed().as_secs_f64();
    let alpha = &set.alphabet;
    let report = export::report_doc(&run.report, &run.model, alpha);
    create_dir(&a.out)?;
    write(&a.out, "model.json", &json(&export::model_doc(&run.model, alpha)))?;
    write(&a.out, "report.json", &json(&report))?;
    write(&a.out, "histogram.csv", &export::histogram_csv(&report.histogram))?;
    write(&a.out, "pool.json", &json(&export::pool_doc(&run.global.pool, alpha)))?;
    write(&a.out, "timing.json", &json(&serde_json::json!({ "runtime_seconds": elapsed })))?;
    if a.patterns {
        write(&a.out, "patterns.json", &json(&export::patterns_doc(&run.local, alpha)))?;
    }
    if a.dot {
        write(&a.out, "causality.dot", &export::graph_dot(&run.global.graph, alpha))?;
        write(&a.out, "model.dot", &export::model_dot(&run.model, alpha))?;
    }
    for (_, m) in &run.local.uncovered {
        eprintln!("warning: no pattern covers {}", alpha.get(*m));
    }
    println!("AR: {:.2}%", 100.0 * run.report.aggregate_ratio);
    println!("model size: {}", run.model.len());
    println!("runtime: {elapsed:.3}s");
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.report)
        .with_context(|| format!("reading {}", a.report.display()))
        .map_err(data)?;
    let doc: export::ReportDoc = serde_json::from_str(&text)
        .with_context(|| format!("malformed report {}", a.report.display()))
        .map_err(data)?;
    let csv = export::histogram_csv(&doc.histogram);
    print!("{csv}");
    let timing = a.report.with_file_name("timing.json");
    let runtime = fs::read_to_string(timing)
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v["runtime_seconds"].as_f64())
        .map_or_else(|| "-".to_owned(), |s| format!("{s:.3}s"));
    println!();
    println!("{:>10} | {:>6} | {:>8}", "RT", "Size", "Ratio");
    println!(
        "{:>10} | {:>6} | {:>7.2}%",
        runtime,
        doc.model_size,
        100.0 * doc.aggregate_ratio
    );
    if let Some(dir) = a.out {
        create_dir(&dir)?;
        write(&dir, "histogram.csv", &csv)?;
    }
    Ok(())
}
