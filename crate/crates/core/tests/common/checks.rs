//! Structural checks shared by the integration suites and the acceptance
//! runner.

use std::collections::BTreeSet;

use minigo_verify::checker::{Action, TraceEvent};
use minigo_verify::model::{Ir, IrKind};

use super::oracle::MonEvent;

/// Constructor nesting without locations, symbol names or monitor acks,
/// which depend on closes anywhere in the program.
pub fn shape(body: &[Ir]) -> String {
    let mut out = String::new();
    for s in body {
        if matches!(s.kind, IrKind::MonSendAck(_)) {
            continue;
        }
        out.push_str(s.kind.name());
        let nested: Vec<&[Ir]> = match &s.kind {
            IrKind::NDChoice(bs) => bs.iter().map(Vec::as_slice).collect(),
            IrKind::GuardedChoice { branches, default } => {
                branches.iter().map(|g| g.cont.as_slice()).chain(default.as_deref()).collect()
            }
            IrKind::BoundedFor { body, .. }
            | IrKind::NDLoop(body)
            | IrKind::Forever(body)
            | IrKind::RangeRecv { body, .. } => vec![body],
            _ => vec![],
        };
        for b in nested {
            out.push('(');
            out.push_str(&shape(b));
            out.push(')');
        }
        out.push(';');
    }
    out
}

/// The trace ends in an ack or close on a channel instance that an earlier
/// event closed, and no earlier event does so.
pub fn violating_trace(trace: &[TraceEvent]) -> Result<(), String> {
    let is_mon = |e: &TraceEvent| matches!(e.action, Action::SendAck | Action::Close);
    let last = trace.iter().rposition(is_mon).ok_or("no monitor event")?;
    if trace[last + 1..].iter().any(is_mon) {
        return Err("trace continues past the offending step".into());
    }
    let mut closed = BTreeSet::new();
    for (k, e) in trace.iter().enumerate() {
        if !is_mon(e) {
            continue;
        }
        let id = e.chan_id.ok_or("monitor event without channel")?;
        match (k == last, closed.contains(&id)) {
            (true, false) => return Err(format!("ch#{id} was never closed before the last step")),
            (false, true) => return Err(format!("event {k} already violates")),
            _ => {}
        }
        if e.action == Action::Close {
            closed.insert(id);
        }
    }
    Ok(())
}

/// Walk events respect the monitor: nothing follows a close.
pub fn clean_events(events: &[MonEvent]) -> bool {
    let mut closed = BTreeSet::new();
    for e in events {
        let (MonEvent::Ack(u) | MonEvent::Close(u)) = e;
        if closed.contains(u) {
            return false;
        }
        if let MonEvent::Close(u) = e {
            closed.insert(*u);
        }
    }
    true
}
