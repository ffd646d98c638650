//! Explicit-state exploration of behavioural models.

mod compile;
mod explore;
mod replay;
mod state;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::Location;

pub use explore::{enabled_moves, explore, Move};
pub use replay::replay_trace;
pub use state::{ChanState, Monitor, ProcState, State, NIL};

pub const DEFAULT_PROCESS_CAP: usize = 256;

/// Values for the free parameters of a model.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub values: BTreeMap<String, u64>,
}

impl Bounds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: u64) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub process_cap: usize,
    pub state_cap: Option<usize>,
    /// Keep exploring after a channel-safety error.
    pub exhaustive: bool,
    /// Stop at the first violation of any kind.
    pub stop_on_first: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { process_cap: DEFAULT_PROCESS_CAP, state_cap: None, exhaustive: false, stop_on_first: false }
    }
}

impl CheckOptions {
    pub fn exhaustive() -> Self {
        CheckOptions { exhaustive: true, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("no value for parameter '{0}'")]
    MissingBound(String),
    #[error("malformed model: {0}")]
    InvalidModel(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("trace diverges at event {0}")]
    DivergentTrace(usize),
    #[error(transparent)]
    Check(#[from] CheckError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Send,
    Recv,
    SendAck,
    Close,
    Spawn,
    Choose,
    LoopEnter,
    LoopExit,
    LoopNext,
    Skip,
    Break,
    Return,
    Make,
    Terminate,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string));
        f.write_str(s.as_deref().unwrap_or("?"))
    }
}

/// One step of one process along a counterexample. Process and channel
/// ids are stable for the whole trace: processes are numbered in creation
/// order from 0 (the entry), channels likewise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub pid: usize,
    pub proc_name: String,
    pub action: Action,
    pub channel: Option<String>,
    pub chan_id: Option<usize>,
    pub location: Location,
    /// Control-flow node and outgoing branch taken.
    pub edge: u32,
    pub branch: u32,
    /// The other side of a rendezvous, or the process a spawn created.
    pub partner: Option<usize>,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}] {} {}", self.location, self.pid, self.proc_name, self.action)?;
        if let (Some(c), Some(id)) = (&self.channel, self.chan_id) {
            write!(f, " {c}#{id}")?;
        }
        if let Some(p) = self.partner {
            write!(f, " with [{p}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    ChannelSafety,
    GlobalDeadlock,
    Leak,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub channel_safe: bool,
    pub global_deadlock_free: bool,
    pub leaks: bool,
    pub states_explored: usize,
    /// Violation the trace demonstrates.
    pub violation: Option<ViolationKind>,
    pub trace: Option<Vec<TraceEvent>>,
    pub resource_bound_hit: bool,
    /// The search ended at a violation before covering every state.
    pub stopped_early: bool,
}

impl Verdict {
    pub fn is_clean(&self) -> bool {
        self.channel_safe && self.global_deadlock_free && !self.leaks
    }
}
