//! Breadth-first search over canonical states.

use indexmap::IndexSet;

use crate::model::BehaviouralModel;

use super::compile::{compile, Code, Compiled, JumpKind, Op};
use super::state::{canonicalize, ChanState, Monitor, Perm, ProcState, State, NIL};
use super::{Action, Bounds, CheckError, CheckOptions, TraceEvent, Verdict, ViolationKind};

/// One transition: process `pid` takes outgoing `branch` of its current
/// node, jointly with `partner` (pid, branch) for a rendezvous.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub pid: u32,
    pub branch: u32,
    pub partner: Option<(u32, u32)>,
}

pub(crate) struct RawEvent {
    pid: usize,
    code: u16,
    pc: u32,
    branch: u32,
    action: Action,
    chan: Option<usize>,
    partner: Option<usize>,
}

pub(crate) fn initial_state(cm: &Compiled) -> State {
    let entry = &cm.codes[0];
    let raw = State { procs: vec![fresh_proc(0, entry)], chans: Vec::new() };
    canonicalize(&raw).0
}

fn fresh_proc(code: u16, c: &Code) -> ProcState {
    ProcState {
        code,
        pc: c.start,
        terminated: false,
        counters: vec![0; c.counters].into_boxed_slice(),
        slots: vec![NIL; c.slots.len()].into_boxed_slice(),
    }
}

fn op_of<'a>(cm: &'a Compiled, p: &ProcState) -> &'a Op {
    &cm.codes[p.code as usize].nodes[p.pc as usize].op
}

fn chan_of(p: &ProcState, slot: u16) -> Option<usize> {
    let c = p.slots[slot as usize];
    (c != NIL).then_some(c as usize)
}

/// Branches of process `j` that can take a rendezvous receive on `ch`.
fn receivers(cm: &Compiled, s: &State, j: usize, ch: usize, out: &mut Vec<u32>) {
    let p = &s.procs[j];
    if p.terminated {
        return;
    }
    match op_of(cm, p) {
        Op::Recv { slot, .. } | Op::RangeHead { slot, .. } if chan_of(p, *slot) == Some(ch) => out.push(0),
        Op::Select { cases, .. } => {
            for (k, c) in cases.iter().enumerate() {
                if !c.send && chan_of(p, c.slot) == Some(ch) {
                    out.push(k as u32);
                }
            }
        }
        _ => {}
    }
}

fn send_moves(cm: &Compiled, s: &State, i: usize, branch: u32, slot: u16, out: &mut Vec<Move>) {
    let Some(ch) = chan_of(&s.procs[i], slot) else { return };
    let c = &s.chans[ch];
    let pid = i as u32;
    if c.monitor != Monitor::Open {
        out.push(Move { pid, branch, partner: None });
    } else if c.cap > 0 {
        if c.len < c.cap {
            out.push(Move { pid, branch, partner: None });
        }
    } else {
        let mut rb = Vec::new();
        for j in 0..s.procs.len() {
            if j == i {
                continue;
            }
            rb.clear();
            receivers(cm, s, j, ch, &mut rb);
            out.extend(rb.iter().map(|&b| Move { pid, branch, partner: Some((j as u32, b)) }));
        }
    }
}

/// A receive that completes without a partner: buffered or closed.
fn can_recv_alone(s: &State, p: &ProcState, slot: u16) -> bool {
    chan_of(p, slot).is_some_and(|ch| {
        let c = &s.chans[ch];
        c.len > 0 || c.monitor != Monitor::Open
    })
}

/// Enabled moves and whether a spawn was refused by the process cap.
pub(crate) fn moves_of(cm: &Compiled, s: &State, process_cap: usize) -> (Vec<Move>, bool) {
    let mut out = Vec::new();
    let mut capped = false;
    for (i, p) in s.procs.iter().enumerate() {
        if p.terminated {
            continue;
        }
        let pid = i as u32;
        let single = |branch| Move { pid, branch, partner: None };
        match op_of(cm, p) {
            Op::Send { slot, .. } => send_moves(cm, s, i, 0, *slot, &mut out),
            Op::Recv { slot, .. } => {
                if can_recv_alone(s, p, *slot) {
                    out.push(single(0));
                }
            }
            Op::Ack { slot, .. } | Op::Close { slot, .. } => {
                if chan_of(p, *slot).is_some() {
                    out.push(single(0));
                }
            }
            Op::Choice { targets } => out.extend((0..targets.len() as u32).map(single)),
            Op::Select { cases, default } => {
                for (k, c) in cases.iter().enumerate() {
                    if c.send {
                        send_moves(cm, s, i, k as u32, c.slot, &mut out);
                    } else if can_recv_alone(s, p, c.slot) {
                        out.push(single(k as u32));
                    }
                }
                if default.is_some() {
                    out.push(single(cases.len() as u32));
                }
            }
            Op::Spawn { .. } => {
                if s.procs.len() < process_cap {
                    out.push(single(0));
                } else {
                    capped = true;
                }
            }
            Op::NdLoopHead { .. } => out.extend([single(0), single(1)]),
            Op::RangeHead { slot, .. } => {
                if let Some(ch) = chan_of(p, *slot) {
                    let c = &s.chans[ch];
                    if c.len > 0 {
                        out.push(single(0));
                    } else if c.monitor != Monitor::Open {
                        out.push(single(1));
                    }
                }
            }
            Op::Declare { .. } | Op::LoopHead { .. } | Op::Jump { .. } | Op::End => out.push(single(0)),
        }
    }
    (out, capped)
}

struct Step<'a> {
    cm: &'a Compiled,
    old: &'a State,
    new: State,
    events: Option<Vec<RawEvent>>,
    error: bool,
}

impl Step<'_> {
    fn emit(&mut self, pid: usize, branch: u32, action: Action, chan: Option<usize>, partner: Option<usize>) {
        if let Some(ev) = &mut self.events {
            let p = &self.old.procs[pid];
            ev.push(RawEvent { pid, code: p.code, pc: p.pc, branch, action, chan, partner });
        }
    }

    fn monitor_edge(&mut self, ch: usize, closing: bool) {
        let m = &mut self.new.chans[ch].monitor;
        *m = match (*m, closing) {
            (Monitor::Open, true) => Monitor::Closed,
            (Monitor::Open, false) => Monitor::Open,
            _ => {
                self.error = true;
                Monitor::Error
            }
        };
    }

    /// Receiver side of a rendezvous or a lone receive: new pc and an
    /// optional slot to release.
    fn recv_target(&self, pid: usize, branch: u32) -> (u32, Option<u16>) {
        match op_of(self.cm, &self.old.procs[pid]) {
            Op::Recv { slot, clear, next } => (*next, clear.then_some(*slot)),
            Op::Select { cases, .. } => (cases[branch as usize].target, None),
            Op::RangeHead { body, .. } => (*body, None),
            _ => unreachable!("not a receiver"),
        }
    }

    fn finish_recv(&mut self, pid: usize, branch: u32) {
        let (pc, clear) = self.recv_target(pid, branch);
        let p = &mut self.new.procs[pid];
        p.pc = pc;
        if let Some(slot) = clear {
            p.slots[slot as usize] = NIL;
        }
    }

    fn send(&mut self, mv: Move, slot: u16, ack: bool, target: u32) {
        let i = mv.pid as usize;
        let ch = chan_of(&self.old.procs[i], slot).expect("enabled send has a channel");
        let c = &self.old.chans[ch];
        if c.monitor != Monitor::Open {
            self.emit(i, mv.branch, Action::Send, Some(ch), None);
        } else if c.cap > 0 {
            self.emit(i, mv.branch, Action::Send, Some(ch), None);
            self.new.chans[ch].len += 1;
        } else {
            let (j, rb) = mv.partner.expect("rendezvous needs a receiver");
            let j = j as usize;
            self.emit(i, mv.branch, Action::Send, Some(ch), Some(j));
            self.emit(j, rb, Action::Recv, Some(ch), Some(i));
            self.finish_recv(j, rb);
        }
        if ack {
            self.emit(i, mv.branch, Action::SendAck, Some(ch), None);
            self.monitor_edge(ch, false);
        }
        let q = &mut self.new.procs[i];
        q.pc = target;
        // A completion signal is the callee's last act.
        let code = &self.cm.codes[q.code as usize];
        if code.done_slot == Some(slot) && matches!(code.nodes[target as usize].op, Op::End) {
            q.terminated = true;
            self.emit(i, mv.branch, Action::Terminate, None, None);
        }
    }

    fn recv_alone(&mut self, i: usize, branch: u32, slot: u16) {
        let ch = chan_of(&self.old.procs[i], slot).expect("enabled receive has a channel");
        self.emit(i, branch, Action::Recv, Some(ch), None);
        let c = &mut self.new.chans[ch];
        if c.len > 0 {
            c.len -= 1;
        }
        self.finish_recv(i, branch);
    }

    fn run(&mut self, mv: Move) {
        let i = mv.pid as usize;
        let b = mv.branch;
        let p = &self.old.procs[i];
        let op = op_of(self.cm, p).clone();
        match op {
            Op::Send { slot, ack, next } => self.send(mv, slot, ack, next),
            Op::Recv { slot, .. } => self.recv_alone(i, b, slot),
            Op::Ack { slot, next } | Op::Close { slot, next } => {
                let closing = matches!(op, Op::Close { .. });
                let ch = chan_of(p, slot).expect("enabled monitor step has a channel");
                self.emit(i, b, if closing { Action::Close } else { Action::SendAck }, Some(ch), None);
                self.monitor_edge(ch, closing);
                self.new.procs[i].pc = next;
            }
            Op::Choice { targets } => {
                self.emit(i, b, Action::Choose, None, None);
                self.new.procs[i].pc = targets[b as usize];
            }
            Op::Select { cases, default } => match cases.get(b as usize) {
                Some(c) if c.send => self.send(mv, c.slot, c.ack, c.target),
                Some(c) => self.recv_alone(i, b, c.slot),
                None => {
                    self.emit(i, b, Action::Choose, None, None);
                    self.new.procs[i].pc = default.expect("default branch exists");
                }
            },
            Op::Spawn { code, args, wait, next } => {
                let child_code = &self.cm.codes[code as usize];
                let mut child = fresh_proc(code, child_code);
                for (k, a) in args.iter().enumerate() {
                    child.slots[k] = p.slots[*a as usize];
                }
                if let Some((wslot, origin)) = wait {
                    let ch = self.new.chans.len();
                    self.new.chans.push(ChanState { cap: 0, len: 0, monitor: Monitor::Open, origin });
                    self.new.procs[i].slots[wslot as usize] = ch as u32;
                    let done = child_code.done_slot.expect("blocking callee signals completion");
                    child.slots[done as usize] = ch as u32;
                }
                let pid = self.new.procs.len();
                self.emit(i, b, Action::Spawn, None, Some(pid));
                self.new.procs.push(child);
                self.new.procs[i].pc = next;
            }
            Op::Declare { slot, cap, origin, next } => {
                let ch = self.new.chans.len();
                self.new.chans.push(ChanState { cap, len: 0, monitor: Monitor::Open, origin });
                self.emit(i, b, Action::Make, Some(ch), None);
                let q = &mut self.new.procs[i];
                q.slots[slot as usize] = ch as u32;
                q.pc = next;
            }
            Op::LoopHead { counter, count, body, exit } => {
                let q = &mut self.new.procs[i];
                if q.counters[counter as usize] < count {
                    q.pc = body;
                    self.emit(i, b, Action::LoopEnter, None, None);
                } else {
                    q.counters[counter as usize] = 0;
                    q.pc = exit;
                    self.emit(i, b, Action::LoopExit, None, None);
                }
            }
            Op::NdLoopHead { body, exit } => {
                let enter = b == 0;
                self.emit(i, b, if enter { Action::LoopEnter } else { Action::LoopExit }, None, None);
                self.new.procs[i].pc = if enter { body } else { exit };
            }
            Op::RangeHead { slot, exit, .. } => {
                if b == 0 {
                    self.recv_alone(i, b, slot);
                } else {
                    self.emit(i, b, Action::LoopExit, chan_of(p, slot), None);
                    self.new.procs[i].pc = exit;
                }
            }
            Op::Jump { target, incr, resets, kind } => {
                let action = match kind {
                    JumpKind::Skip => Action::Skip,
                    JumpKind::Break => Action::Break,
                    JumpKind::Return => Action::Return,
                    JumpKind::Next => Action::LoopNext,
                };
                self.emit(i, b, action, None, None);
                let q = &mut self.new.procs[i];
                if let Some(c) = incr {
                    q.counters[c as usize] += 1;
                }
                for c in resets {
                    q.counters[c as usize] = 0;
                }
                q.pc = target;
            }
            Op::End => {
                self.emit(i, b, Action::Terminate, None, None);
                self.new.procs[i].terminated = true;
            }
        }
    }
}

/// Successor of `s` under `mv` before canonicalization, whether the move
/// drove a monitor into error, and the events when requested.
pub(crate) fn apply(cm: &Compiled, s: &State, mv: Move, with_events: bool) -> (State, bool, Vec<RawEvent>) {
    let mut step = Step { cm, old: s, new: s.clone(), events: with_events.then(Vec::new), error: false };
    step.run(mv);
    (step.new, step.error, step.events.unwrap_or_default())
}

/// Stable ids of the processes and channels of the current state.
#[derive(Clone, Debug)]
pub(crate) struct Ids {
    procs: Vec<usize>,
    chans: Vec<usize>,
    next_pid: usize,
    next_chan: usize,
}

impl Ids {
    pub(crate) fn new() -> Self {
        Ids { procs: vec![0], chans: Vec::new(), next_pid: 1, next_chan: 0 }
    }

    /// Number the processes and channels `raw` added to `old`.
    pub(crate) fn extend(&mut self, raw: &State) {
        while self.procs.len() < raw.procs.len() {
            self.procs.push(self.next_pid);
            self.next_pid += 1;
        }
        while self.chans.len() < raw.chans.len() {
            self.chans.push(self.next_chan);
            self.next_chan += 1;
        }
    }

    pub(crate) fn remap(&mut self, perm: &Perm) {
        let mut procs = vec![0; perm.procs.iter().flatten().count()];
        for (old, new) in perm.procs.iter().enumerate() {
            if let Some(n) = new {
                procs[*n] = self.procs[old];
            }
        }
        let mut chans = vec![0; perm.chans.iter().flatten().count()];
        for (old, new) in perm.chans.iter().enumerate() {
            if let Some(n) = new {
                chans[*n] = self.chans[old];
            }
        }
        self.procs = procs;
        self.chans = chans;
    }

    pub(crate) fn events(&self, cm: &Compiled, raw: &State, evs: &[RawEvent]) -> Vec<TraceEvent> {
        evs.iter()
            .map(|e| {
                let code = &cm.codes[e.code as usize];
                TraceEvent {
                    pid: self.procs[e.pid],
                    proc_name: code.name.clone(),
                    action: e.action,
                    channel: e.chan.map(|c| cm.origins[raw.chans[c].origin as usize].clone()),
                    chan_id: e.chan.map(|c| self.chans[c]),
                    location: code.nodes[e.pc as usize].loc.clone(),
                    edge: e.pc,
                    branch: e.branch,
                    partner: e.partner.map(|p| self.procs[p]),
                }
            })
            .collect()
    }
}

fn classify(s: &State) -> Option<ViolationKind> {
    if !s.procs[0].terminated {
        Some(ViolationKind::GlobalDeadlock)
    } else if s.procs.len() > 1 {
        Some(ViolationKind::Leak)
    } else {
        None
    }
}

/// Where a violation was found: the state, plus the move out of it for
/// channel-safety errors.
type Witness = (usize, Option<usize>);

fn trace(cm: &Compiled, seen: &IndexSet<State>, parents: &[(u32, u32)], w: Witness, cap: usize) -> Vec<TraceEvent> {
    let mut path = Vec::new();
    if let Some(k) = w.1 {
        path.push((w.0, k));
    }
    let mut cur = w.0;
    while cur != 0 {
        let (parent, k) = parents[cur];
        path.push((parent as usize, k as usize));
        cur = parent as usize;
    }
    path.reverse();
    let mut ids = Ids::new();
    let mut out = Vec::new();
    for (sidx, k) in path {
        let s = &seen[sidx];
        let mv = moves_of(cm, s, cap).0[k];
        let (raw, _, evs) = apply(cm, s, mv, true);
        ids.extend(&raw);
        out.extend(ids.events(cm, &raw, &evs));
        ids.remap(&canonicalize(&raw).1);
    }
    out
}

/// Moves enabled in `s`, for inspection and tests.
pub fn enabled_moves(m: &BehaviouralModel, b: &Bounds, s: &State) -> Result<Vec<Move>, CheckError> {
    let cm = compile(m, b)?;
    Ok(moves_of(&cm, s, usize::MAX).0)
}

pub fn explore(m: &BehaviouralModel, b: &Bounds, opts: &CheckOptions) -> Result<Verdict, CheckError> {
    let cm = compile(m, b)?;
    let mut seen: IndexSet<State> = IndexSet::new();
    seen.insert(initial_state(&cm));
    let mut parents: Vec<(u32, u32)> = vec![(0, 0)];
    let mut cs: Option<Witness> = None;
    let mut gd: Option<Witness> = None;
    let mut leak: Option<Witness> = None;
    let mut resource = false;
    let mut stopped = false;
    let mut head = 0;
    'search: while head < seen.len() {
        let s = seen[head].clone();
        let (moves, capped) = moves_of(&cm, &s, opts.process_cap);
        resource |= capped;
        if moves.is_empty() && !capped {
            let found = match classify(&s) {
                Some(ViolationKind::GlobalDeadlock) => Some(&mut gd),
                Some(ViolationKind::Leak) => Some(&mut leak),
                _ => None,
            };
            if let Some(slot) = found {
                slot.get_or_insert((head, None));
                if opts.stop_on_first {
                    stopped = true;
                    break;
                }
            }
        }
        for (k, mv) in moves.iter().enumerate() {
            let (raw, error, _) = apply(&cm, &s, *mv, false);
            let (canon, _) = canonicalize(&raw);
            let (_, new) = seen.insert_full(canon);
            if new {
                parents.push((head as u32, k as u32));
            }
            if error && cs.is_none() {
                cs = Some((head, Some(k)));
                if !opts.exhaustive || opts.stop_on_first {
                    stopped = true;
                    break 'search;
                }
            }
            if opts.state_cap.is_some_and(|cap| seen.len() >= cap) {
                resource = true;
                stopped = true;
                break 'search;
            }
        }
        head += 1;
    }
    let (violation, witness) = match (cs, gd, leak) {
        (Some(w), _, _) => (Some(ViolationKind::ChannelSafety), Some(w)),
        (_, Some(w), _) => (Some(ViolationKind::GlobalDeadlock), Some(w)),
        (_, _, Some(w)) => (Some(ViolationKind::Leak), Some(w)),
        _ => (None, None),
    };
    Ok(Verdict {
        channel_safe: cs.is_none(),
        global_deadlock_free: gd.is_none(),
        leaks: leak.is_some(),
        states_explored: seen.len(),
        violation,
        trace: witness.map(|w| trace(&cm, &seen, &parents, w, opts.process_cap)),
        resource_bound_hit: resource,
        stopped_early: stopped,
    })
}
