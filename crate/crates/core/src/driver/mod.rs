//! Pipeline over input files: parse, partition, bind parameters, check,
//! report.

mod config;
mod render;
mod report;

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::checker::{explore, Bounds, CheckError, CheckOptions};
use crate::model::{build_model, partition_program, BehaviouralModel, BuildError};
use crate::params::Role;
use crate::promela;
use crate::syntax::{parse_program_named, validate_assumptions, Location, ParseError, Violation};

pub use config::{merge_bounds, parse_assignment, parse_assignment_list, RunConfig, BOUNDS_ENV};
pub use render::{render_human, render_json, render_report};
pub use report::{AppliedParam, AssumptionWarning, PartitionReport, Report, Totals, SCHEMA_VERSION};

/// A free parameter no bound was given for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unresolved {
    pub file: String,
    pub partition: String,
    pub symbol: String,
    pub role: Role,
    pub expr: Option<String>,
    pub origin: Location,
}

impl fmt::Display for Unresolved {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} {}) in partition {}, first needed at {}",
            self.symbol,
            self.role,
            self.expr.as_deref().unwrap_or("of an unrecognized loop"),
            self.partition,
            self.origin
        )
    }
}

fn list<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| format!("\n  {i}")).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: String, source: ParseError },
    #[error("{0}")]
    Build(#[from] BuildError),
    #[error("assumption violations:{}", list(.0))]
    Assumptions(Vec<Violation>),
    #[error("unresolved parameters (use --bound NAME=INT or --default-bound INT):{}", list(.0))]
    UnresolvedBounds(Vec<Unresolved>),
    #[error("{0}")]
    Check(#[from] CheckError),
}

struct Work {
    file: String,
    name: String,
    model: BehaviouralModel,
    bounds: Bounds,
    params: Vec<AppliedParam>,
    extract_millis: u64,
}

fn millis(t: Instant) -> u64 {
    u64::try_from(t.elapsed().as_millis()).unwrap_or(u64::MAX)
}

pub fn run_analysis(cfg: &RunConfig) -> Result<Report, DriverError> {
    let mut work = Vec::new();
    let mut unresolved = Vec::new();
    let mut warnings = Vec::new();
    for path in &cfg.inputs {
        let file = path.display().to_string();
        let src = fs::read_to_string(path).map_err(|source| DriverError::Io { path: file.clone(), source })?;
        let started = Instant::now();
        let program =
            parse_program_named(&file, &src).map_err(|source| DriverError::Parse { path: file.clone(), source })?;
        let violations = validate_assumptions(&program);
        if cfg.strict_assumptions && !violations.is_empty() {
            return Err(DriverError::Assumptions(violations));
        }
        warnings.extend(violations.into_iter().map(|violation| AssumptionWarning { file: file.clone(), violation }));
        let parse_millis = millis(started);
        for entry in partition_program(&program) {
            let started = Instant::now();
            let model = build_model(entry, &program)?;
            let mut bounds = Bounds::new();
            let mut params = Vec::new();
            for p in &model.free_params {
                match cfg.bound_for(&p.name) {
                    Some(value) => {
                        bounds.values.insert(p.name.clone(), value);
                        params.push(AppliedParam {
                            name: p.name.clone(),
                            value,
                            role: p.role,
                            expr: p.expr.clone(),
                            origin: p.origin.clone(),
                        });
                    }
                    None => unresolved.push(Unresolved {
                        file: file.clone(),
                        partition: entry.name.clone(),
                        symbol: p.name.clone(),
                        role: p.role,
                        expr: p.expr.clone(),
                        origin: p.origin.clone(),
                    }),
                }
            }
            work.push(Work {
                file: file.clone(),
                name: entry.name.clone(),
                model,
                bounds,
                params,
                extract_millis: parse_millis + millis(started),
            });
        }
    }
    if !unresolved.is_empty() {
        return Err(DriverError::UnresolvedBounds(unresolved));
    }
    if let Some(dir) = &cfg.emit_promela_dir {
        fs::create_dir_all(dir).map_err(|source| DriverError::Io { path: dir.display().to_string(), source })?;
    }
    let opts = CheckOptions {
        process_cap: cfg.process_cap,
        state_cap: cfg.state_cap,
        exhaustive: cfg.exhaustive,
        stop_on_first: cfg.stop_on_first_violation,
    };
    let check = |(index, w): (usize, &Work)| -> Result<PartitionReport, DriverError> {
        let promela_file = match &cfg.emit_promela_dir {
            Some(dir) => Some(emit(dir, index, w)?),
            None => None,
        };
        let started = Instant::now();
        let verdict = explore(&w.model, &w.bounds, &opts)?;
        let mut r = PartitionReport::from_verdict(&w.file, &w.name, verdict);
        r.check_millis = millis(started);
        r.extract_millis = w.extract_millis;
        r.free_params = w.params.clone();
        r.promela_file = promela_file;
        Ok(r)
    };
    let results: Vec<Result<PartitionReport, DriverError>> = match cfg.jobs {
        Some(1) => work.iter().enumerate().map(check).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(|| work.par_iter().enumerate().map(check).collect()))
            .unwrap_or_else(|_| work.iter().enumerate().map(check).collect()),
        None => work.par_iter().enumerate().map(check).collect(),
    };
    let partitions = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Report::new(partitions, warnings))
}

fn emit(dir: &Path, index: usize, w: &Work) -> Result<String, DriverError> {
    let text = promela::emit_model(&w.model, &w.bounds)?;
    let path = dir.join(promela::file_name(&w.name, index));
    fs::write(&path, text).map_err(|source| DriverError::Io { path: path.display().to_string(), source })?;
    Ok(path.display().to_string())
}
