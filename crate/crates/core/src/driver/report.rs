//! Analysis reports.

use serde::{Deserialize, Serialize};

use crate::checker::{TraceEvent, Verdict, ViolationKind};
use crate::params::Role;
use crate::syntax::{Location, Violation};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedParam {
    pub name: String,
    pub value: u64,
    pub role: Role,
    pub expr: Option<String>,
    pub origin: Location,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub file: String,
    pub name: String,
    pub states_explored: usize,
    pub channel_safe: bool,
    pub global_deadlock_free: bool,
    pub leaks: bool,
    pub resource_bound_hit: bool,
    pub stopped_early: bool,
    pub extract_millis: u64,
    pub check_millis: u64,
    pub free_params: Vec<AppliedParam>,
    pub violation: Option<ViolationKind>,
    pub trace: Option<Vec<TraceEvent>>,
    pub promela_file: Option<String>,
}

impl PartitionReport {
    pub fn from_verdict(file: &str, name: &str, v: Verdict) -> Self {
        PartitionReport {
            file: file.to_string(),
            name: name.to_string(),
            states_explored: v.states_explored,
            channel_safe: v.channel_safe,
            global_deadlock_free: v.global_deadlock_free,
            leaks: v.leaks,
            resource_bound_hit: v.resource_bound_hit,
            stopped_early: v.stopped_early,
            extract_millis: 0,
            check_millis: 0,
            free_params: Vec::new(),
            violation: v.violation,
            trace: v.trace,
            promela_file: None,
        }
    }

    pub fn violated(&self) -> bool {
        !self.channel_safe || !self.global_deadlock_free || self.leaks
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub partitions: usize,
    pub violated: usize,
    pub states_explored: usize,
    pub extract_millis: u64,
    pub check_millis: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionWarning {
    pub file: String,
    pub violation: Violation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    /// In file order, then declaration order.
    pub partitions: Vec<PartitionReport>,
    pub assumption_warnings: Vec<AssumptionWarning>,
    pub totals: Totals,
}

impl Report {
    pub fn new(partitions: Vec<PartitionReport>, assumption_warnings: Vec<AssumptionWarning>) -> Self {
        let totals = Totals {
            partitions: partitions.len(),
            violated: partitions.iter().filter(|p| p.violated()).count(),
            states_explored: partitions.iter().map(|p| p.states_explored).sum(),
            extract_millis: partitions.iter().map(|p| p.extract_millis).sum(),
            check_millis: partitions.iter().map(|p| p.check_millis).sum(),
        };
        Report { schema_version: SCHEMA_VERSION, partitions, assumption_warnings, totals }
    }

    /// 0 when every partition is clean and complete, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        let bad = self.partitions.iter().any(|p| p.violated() || p.resource_bound_hit);
        i32::from(bad)
    }
}
