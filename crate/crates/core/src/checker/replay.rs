//! Deterministic re-execution of counterexample traces.

use crate::model::BehaviouralModel;

use super::compile::compile;
use super::explore::{apply, initial_state, moves_of, Ids};
use super::state::{canonicalize, State};
use super::{Bounds, ReplayError, TraceEvent};

/// Re-executes `trace` from the initial state and returns the final state
/// in canonical form.
pub fn replay_trace(m: &BehaviouralModel, b: &Bounds, trace: &[TraceEvent]) -> Result<State, ReplayError> {
    let cm = compile(m, b)?;
    let mut s = initial_state(&cm);
    let mut ids = Ids::new();
    let mut i = 0;
    while i < trace.len() {
        let (moves, _) = moves_of(&cm, &s, usize::MAX);
        let step = moves.into_iter().find_map(|mv| {
            let (raw, _, evs) = apply(&cm, &s, mv, true);
            let mut next_ids = ids.clone();
            next_ids.extend(&raw);
            let evs = next_ids.events(&cm, &raw, &evs);
            trace[i..].starts_with(&evs).then_some((raw, evs.len(), next_ids))
        });
        let Some((raw, n, mut next_ids)) = step else {
            return Err(ReplayError::DivergentTrace(i));
        };
        let (canon, perm) = canonicalize(&raw);
        next_ids.remap(&perm);
        s = canon;
        ids = next_ids;
        i += n;
    }
    Ok(s)
}
