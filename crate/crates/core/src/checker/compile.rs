//! Lowering of IR procs to flat control-flow graphs with resolved bounds.

use std::collections::HashMap;

use crate::model::{BehaviouralModel, Ir, IrKind, ProcDef};
use crate::params::Bound;
use crate::syntax::Location;

use super::{Bounds, CheckError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum JumpKind {
    Skip,
    Break,
    Return,
    Next,
}

#[derive(Clone, Debug)]
pub(crate) struct Case {
    pub send: bool,
    pub slot: u16,
    pub ack: bool,
    pub target: u32,
}

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Send { slot: u16, ack: bool, next: u32 },
    /// `clear` releases the slot afterwards (completion channels).
    Recv { slot: u16, clear: bool, next: u32 },
    Ack { slot: u16, next: u32 },
    Close { slot: u16, next: u32 },
    Choice { targets: Vec<u32> },
    Select { cases: Vec<Case>, default: Option<u32> },
    /// `wait` holds the caller's completion slot and the channel's origin id.
    Spawn { code: u16, args: Vec<u16>, wait: Option<(u16, u16)>, next: u32 },
    Declare { slot: u16, cap: u32, origin: u16, next: u32 },
    LoopHead { counter: u16, count: u32, body: u32, exit: u32 },
    NdLoopHead { body: u32, exit: u32 },
    RangeHead { slot: u16, body: u32, exit: u32 },
    Jump { target: u32, incr: Option<u16>, resets: Vec<u16>, kind: JumpKind },
    End,
}

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub op: Op,
    pub loc: Location,
}

#[derive(Clone, Debug)]
pub(crate) struct Code {
    pub name: String,
    pub nodes: Vec<Node>,
    pub start: u32,
    pub counters: usize,
    pub slots: Vec<String>,
    pub done_slot: Option<u16>,
}

#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    /// Index 0 is the entry.
    pub codes: Vec<Code>,
    /// Channel names by origin id.
    pub origins: Vec<String>,
}

pub(crate) const WAIT_SLOT: &str = "_wait";
pub(crate) const DONE_SLOT: &str = "_done";

pub(crate) fn resolve(b: &Bound, bounds: &Bounds) -> Result<i64, CheckError> {
    match b {
        Bound::Lit(n) => Ok(*n),
        Bound::Sym(s) => bounds
            .values
            .get(s)
            .map(|v| i64::try_from(*v).unwrap_or(i64::MAX))
            .ok_or_else(|| CheckError::MissingBound(s.clone())),
    }
}

fn to_u32(n: i64) -> u32 {
    n.clamp(0, u32::MAX as i64 - 1) as u32
}

pub(crate) fn compile(m: &BehaviouralModel, bounds: &Bounds) -> Result<Compiled, CheckError> {
    let procs: Vec<&ProcDef> = m.all_procs().collect();
    let index: HashMap<&str, u16> =
        procs.iter().enumerate().map(|(i, p)| (p.name.as_str(), i as u16)).collect();
    let mut origins = Vec::new();
    let mut codes = Vec::new();
    for p in &procs {
        let mut c = Compiler {
            nodes: Vec::new(),
            slots: p.chan_params.clone(),
            counters: 0,
            loops: Vec::new(),
            ret: 0,
            bounds,
            index: &index,
            origins: &mut origins,
        };
        let end_loc = p.body.last().map(|s| s.loc.clone()).unwrap_or_else(Location::unknown);
        let end = c.push(Op::End, &end_loc);
        let done_slot = p.completion_signal.then(|| c.slot(DONE_SLOT));
        c.ret = match done_slot {
            Some(slot) => c.push(Op::Send { slot, ack: false, next: end }, &end_loc),
            None => end,
        };
        let ret = c.ret;
        let start = c.seq(&p.body, ret)?;
        codes.push(Code {
            name: p.name.clone(),
            start,
            counters: c.counters as usize,
            slots: c.slots,
            nodes: c.nodes,
            done_slot,
        });
    }
    Ok(Compiled { codes, origins })
}

struct Compiler<'a> {
    nodes: Vec<Node>,
    slots: Vec<String>,
    counters: u16,
    /// Enclosing loops: exit target and iteration counter.
    loops: Vec<(u32, Option<u16>)>,
    ret: u32,
    bounds: &'a Bounds,
    index: &'a HashMap<&'a str, u16>,
    origins: &'a mut Vec<String>,
}

impl Compiler<'_> {
    fn push(&mut self, op: Op, loc: &Location) -> u32 {
        self.nodes.push(Node { op, loc: loc.clone() });
        (self.nodes.len() - 1) as u32
    }

    fn placeholder(&mut self, loc: &Location) -> u32 {
        self.push(Op::End, loc)
    }

    fn slot(&mut self, name: &str) -> u16 {
        match self.slots.iter().position(|s| s == name) {
            Some(i) => i as u16,
            None => {
                self.slots.push(name.to_string());
                (self.slots.len() - 1) as u16
            }
        }
    }

    fn origin(&mut self, name: &str) -> u16 {
        match self.origins.iter().position(|s| s == name) {
            Some(i) => i as u16,
            None => {
                self.origins.push(name.to_string());
                (self.origins.len() - 1) as u16
            }
        }
    }

    /// A send directly followed by its ack on the same channel.
    fn fused_ack(send: &Ir, next: Option<&Ir>) -> bool {
        match (&send.kind, next.map(|n| &n.kind)) {
            (IrKind::SendIn(a), Some(IrKind::MonSendAck(b))) => a == b,
            _ => false,
        }
    }

    fn seq(&mut self, body: &[Ir], cont: u32) -> Result<u32, CheckError> {
        let mut next = cont;
        let mut i = body.len();
        while i > 0 {
            i -= 1;
            if i > 0 && Self::fused_ack(&body[i - 1], Some(&body[i])) {
                let IrKind::SendIn(c) = &body[i - 1].kind else { unreachable!() };
                let slot = self.slot(c);
                next = self.push(Op::Send { slot, ack: true, next }, &body[i - 1].loc);
                i -= 1;
                continue;
            }
            next = self.stmt(&body[i], next)?;
        }
        Ok(next)
    }

    fn jump(&mut self, target: u32, kind: JumpKind, resets: Vec<u16>, loc: &Location) -> u32 {
        let incr = None;
        self.push(Op::Jump { target, incr, resets, kind }, loc)
    }

    fn stmt(&mut self, s: &Ir, next: u32) -> Result<u32, CheckError> {
        let loc = &s.loc;
        Ok(match &s.kind {
            IrKind::SendIn(c) => {
                let slot = self.slot(c);
                self.push(Op::Send { slot, ack: false, next }, loc)
            }
            IrKind::RecvIn(c) => {
                let slot = self.slot(c);
                self.push(Op::Recv { slot, clear: false, next }, loc)
            }
            IrKind::MonSendAck(c) => {
                let slot = self.slot(c);
                self.push(Op::Ack { slot, next }, loc)
            }
            IrKind::MonClose(c) => {
                let slot = self.slot(c);
                self.push(Op::Close { slot, next }, loc)
            }
            IrKind::NDChoice(branches) => {
                let mut targets = Vec::new();
                for b in branches {
                    targets.push(self.seq(b, next)?);
                }
                self.push(Op::Choice { targets }, loc)
            }
            IrKind::GuardedChoice { branches, default } => {
                let mut cases = Vec::new();
                for g in branches {
                    let ack = Self::fused_ack(&g.guard, g.cont.first());
                    let rest = if ack { &g.cont[1..] } else { &g.cont[..] };
                    let target = self.seq(rest, next)?;
                    let (send, c) = match &g.guard.kind {
                        IrKind::SendIn(c) => (true, c),
                        IrKind::RecvIn(c) => (false, c),
                        other => {
                            return Err(CheckError::InvalidModel(format!(
                                "{}: select guard must be a send or receive, found {}",
                                g.guard.loc,
                                other.name()
                            )))
                        }
                    };
                    let slot = self.slot(c);
                    cases.push(Case { send, slot, ack, target });
                }
                let default = match default {
                    Some(d) => Some(self.seq(d, next)?),
                    None => None,
                };
                self.push(Op::Select { cases, default }, loc)
            }
            IrKind::RunBlocking { proc, args } | IrKind::RunAsync { proc, args } => {
                let code = *self
                    .index
                    .get(proc.as_str())
                    .ok_or_else(|| CheckError::InvalidModel(format!("unknown process '{proc}'")))?;
                let args = args.iter().map(|a| self.slot(a)).collect();
                let (wait, next) = if matches!(s.kind, IrKind::RunBlocking { .. }) {
                    let slot = self.slot(WAIT_SLOT);
                    let origin = self.origin(&format!("{proc}.done"));
                    (Some((slot, origin)), self.push(Op::Recv { slot, clear: true, next }, loc))
                } else {
                    (None, next)
                };
                self.push(Op::Spawn { code, args, wait, next }, loc)
            }
            IrKind::BoundedFor { from, to, body } => {
                let count = to_u32(resolve(to, self.bounds)?.saturating_sub(resolve(from, self.bounds)?));
                let counter = self.counters;
                self.counters += 1;
                let head = self.placeholder(loc);
                let back = self.push(
                    Op::Jump { target: head, incr: Some(counter), resets: Vec::new(), kind: JumpKind::Next },
                    loc,
                );
                self.loops.push((next, Some(counter)));
                let body = self.seq(body, back)?;
                self.loops.pop();
                self.nodes[head as usize].op = Op::LoopHead { counter, count, body, exit: next };
                head
            }
            IrKind::NDLoop(body) => {
                let head = self.placeholder(loc);
                let back = self.jump(head, JumpKind::Next, Vec::new(), loc);
                self.loops.push((next, None));
                let body = self.seq(body, back)?;
                self.loops.pop();
                self.nodes[head as usize].op = Op::NdLoopHead { body, exit: next };
                head
            }
            IrKind::Forever(body) => {
                let back = self.placeholder(loc);
                self.loops.push((next, None));
                let start = self.seq(body, back)?;
                self.loops.pop();
                self.nodes[back as usize].op =
                    Op::Jump { target: start, incr: None, resets: Vec::new(), kind: JumpKind::Next };
                start
            }
            IrKind::RangeRecv { chan, body } => {
                let slot = self.slot(chan);
                let head = self.placeholder(loc);
                let back = self.jump(head, JumpKind::Next, Vec::new(), loc);
                self.loops.push((next, None));
                let body = self.seq(body, back)?;
                self.loops.pop();
                self.nodes[head as usize].op = Op::RangeHead { slot, body, exit: next };
                head
            }
            IrKind::DeclareChan(c) => {
                let cap = to_u32(resolve(&c.capacity, self.bounds)?);
                let slot = self.slot(&c.name);
                let origin = self.origin(&c.name);
                self.push(Op::Declare { slot, cap, origin, next }, loc)
            }
            IrKind::Skip => self.jump(next, JumpKind::Skip, Vec::new(), loc),
            IrKind::BreakLoop => {
                let Some(&(exit, counter)) = self.loops.last() else {
                    return Err(CheckError::InvalidModel(format!("{loc}: break outside of a loop")));
                };
                self.jump(exit, JumpKind::Break, counter.into_iter().collect(), loc)
            }
            IrKind::Return => {
                let resets = self.loops.iter().filter_map(|l| l.1).collect();
                let ret = self.ret;
                self.jump(ret, JumpKind::Return, resets, loc)
            }
        })
    }
}
