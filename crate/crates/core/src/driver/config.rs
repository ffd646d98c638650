//! Run configuration and bound assignments.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::checker::DEFAULT_PROCESS_CAP;

pub const BOUNDS_ENV: &str = "MINIGO_VERIFY_BOUNDS";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub bounds: BTreeMap<String, u64>,
    pub default_bound: Option<u64>,
    pub emit_promela_dir: Option<PathBuf>,
    pub json_output: bool,
    pub strict_assumptions: bool,
    pub stop_on_first_violation: bool,
    /// Keep exploring after a channel-safety error.
    pub exhaustive: bool,
    pub process_cap: usize,
    pub state_cap: Option<usize>,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            bounds: BTreeMap::new(),
            default_bound: None,
            emit_promela_dir: None,
            json_output: false,
            strict_assumptions: false,
            stop_on_first_violation: false,
            exhaustive: false,
            process_cap: DEFAULT_PROCESS_CAP,
            state_cap: None,
            jobs: None,
        }
    }
}

impl RunConfig {
    /// Value for a symbol: an explicit bound, else the default.
    pub fn bound_for(&self, name: &str) -> Option<u64> {
        self.bounds.get(name).copied().or(self.default_bound)
    }
}

/// Parses `NAME=INT`.
pub fn parse_assignment(s: &str) -> Result<(String, u64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=INT, got '{s}'"))?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(format!("invalid parameter name '{name}'"));
    }
    let value = value.trim().parse::<u64>().map_err(|e| format!("invalid value for {name}: {e}"))?;
    Ok((name.to_string(), value))
}

/// Parses a comma-separated `NAME=INT` list; empty entries are ignored.
pub fn parse_assignment_list(s: &str) -> Result<Vec<(String, u64)>, String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(parse_assignment).collect()
}

/// Environment assignments first, flags override.
pub fn merge_bounds(env: &[(String, u64)], flags: &[(String, u64)]) -> BTreeMap<String, u64> {
    env.iter().chain(flags).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("len_files_0=15"), Ok(("len_files_0".into(), 15)));
        assert!(parse_assignment("k").is_err());
        assert!(parse_assignment("k=-1").is_err());
        assert!(parse_assignment("a b=1").is_err());
        assert_eq!(parse_assignment_list(" k_0=2, n_0=3,,").unwrap().len(), 2);
    }

    #[test]
    fn flags_override_environment() {
        let env = parse_assignment_list("k_0=1,n_0=2").unwrap();
        let flags = vec![("k_0".to_string(), 5)];
        let merged = merge_bounds(&env, &flags);
        assert_eq!(merged["k_0"], 5);
        assert_eq!(merged["n_0"], 2);
    }

    #[test]
    fn default_bound_fills_the_rest() {
        let cfg = RunConfig { bounds: [("a".to_string(), 1)].into(), default_bound: Some(7), ..Default::default() };
        assert_eq!(cfg.bound_for("a"), Some(1));
        assert_eq!(cfg.bound_for("b"), Some(7));
    }
}
