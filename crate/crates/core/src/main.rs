use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use minigo_verify::driver::{
    merge_bounds, parse_assignment, parse_assignment_list, render_report, run_analysis, RunConfig, BOUNDS_ENV,
};

/// Statically verify channel safety, global deadlock freedom and goroutine
/// leaks in MiniGo programs.
#[derive(Parser, Debug)]
#[command(name = "minigo-verify", version)]
struct Cli {
    /// MiniGo source files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Value for a model parameter, e.g. len_files_0=15.
    #[arg(long = "bound", value_name = "NAME=INT", value_parser = parse_assignment)]
    bounds: Vec<(String, u64)>,
    /// Value for every parameter without an explicit bound.
    #[arg(long, value_name = "INT")]
    default_bound: Option<u64>,
    /// Write one Promela file per partition into DIR.
    #[arg(long, value_name = "DIR")]
    emit_promela: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    /// Treat assumption violations as errors.
    #[arg(long)]
    strict: bool,
    /// Stop each partition at its first violation.
    #[arg(long)]
    stop_on_first: bool,
    /// Keep exploring after a channel-safety error.
    #[arg(long, conflicts_with = "stop_on_first")]
    exhaustive: bool,
    /// Maximum number of live processes.
    #[arg(long, value_name = "INT", default_value_t = minigo_verify::checker::DEFAULT_PROCESS_CAP)]
    max_procs: usize,
    /// Maximum number of states per partition.
    #[arg(long, value_name = "INT")]
    max_states: Option<usize>,
    /// Partitions checked in parallel.
    #[arg(long, value_name = "INT")]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env = match std::env::var(BOUNDS_ENV) {
        Ok(v) => match parse_assignment_list(&v) {
            Ok(list) => list,
            Err(e) => {
                eprintln!("error: {BOUNDS_ENV}: {e}");
                return ExitCode::from(2);
            }
        },
        Err(_) => Vec::new(),
    };
    let cfg = RunConfig {
        inputs: cli.files,
        bounds: merge_bounds(&env, &cli.bounds),
        default_bound: cli.default_bound,
        emit_promela_dir: cli.emit_promela,
        json_output: cli.json,
        strict_assumptions: cli.strict,
        stop_on_first_violation: cli.stop_on_first,
        exhaustive: cli.exhaustive,
        process_cap: cli.max_procs.max(1),
        state_cap: cli.max_states,
        jobs: cli.jobs.filter(|&j| j > 0),
    };
    match run_analysis(&cfg) {
        Ok(report) => {
            let mut text = render_report(&report, cfg.json_output);
            if cfg.json_output {
                text.push('\n');
            }
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
