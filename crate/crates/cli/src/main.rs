use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use foliation_core::{Mode, TraceConfig};
use foliation_lab::pipeline::{parse_tasks, resolve_inputs, run, AnalysisRequest, RunError, RunOutput, Task};

const EXIT_VALIDATION: u8 = 2;
const EXIT_OBSTRUCTED: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

/// Normal forms, holonomy and first integrals of germs of vector fields.
#[derive(Debug, Parser)]
#[command(name = "foliation-lab", version)]
struct Args {
    /// A field file (.json or .toml) or a directory of them.
    #[arg(long)]
    input: PathBuf,
    /// Truncation degree, 2..=16.
    #[arg(long, default_value_t = 8)]
    cap: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Comma-separated subset of resonance,normalform,holonomy,integrals,trace, or "all".
    #[arg(long, default_value = "all")]
    tasks: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for report.json, timing.json and traces/.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    trace_epsilon: f64,
    /// Complex start of the separatrix axis, as RE,IM.
    #[arg(long, default_value = "0.5,0")]
    trace_c0: String,
}

fn parse_c0(s: &str) -> anyhow::Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').collect();
    anyhow::ensure!(parts.len() == 2, "--trace-c0 expects RE,IM");
    Ok([parts[0].trim().parse()?, parts[1].trim().parse()?])
}

fn request(args: &Args) -> anyhow::Result<AnalysisRequest> {
    let trace = TraceConfig {
        epsilon: args.trace_epsilon,
        c0: parse_c0(&args.trace_c0)?,
        ..TraceConfig::default()
    };
    let mode = match args.mode {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Float => Mode::Float,
    };
    let mut tasks = parse_tasks(&args.tasks)?;
    // "all" in exact mode means every task that has an exact version.
    if args.tasks.trim() == "all" && mode == Mode::Exact {
        tasks.remove(&Task::Trace);
    }
    Ok(AnalysisRequest {
        inputs: resolve_inputs(&args.input)?,
        cap: args.cap,
        mode,
        tasks,
        seed: args.seed,
        trace,
    })
}

fn write_outputs(out: &RunOutput, dir: &std::path::Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&out.report)? + "\n")?;
    let timing: serde_json::Map<String, serde_json::Value> =
        out.timing.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
    std::fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
    if !out.traces.is_empty() {
        let traces = dir.join("traces");
        std::fs::create_dir_all(&traces)?;
        for t in &out.traces {
            std::fs::write(traces.join(&t.name), &t.contents)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Ok(v) = std::env::var("FOLIATION_LAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(EXIT_INTERNAL);
                }
            }
            _ => {
                eprintln!("error: FOLIATION_LAB_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(EXIT_VALIDATION);
            }
        }
    }
    let req = match request(&args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let out = match run(&req) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                RunError::Validation(_) => EXIT_VALIDATION,
                RunError::Internal(_) => EXIT_INTERNAL,
            });
        }
    };
    if let Err(e) = write_outputs(&out, &args.out) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_INTERNAL);
    }
    if out.obstructed {
        ExitCode::from(EXIT_OBSTRUCTED)
    } else {
        ExitCode::SUCCESS
    }
}
