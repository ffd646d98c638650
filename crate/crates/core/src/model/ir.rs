//! Behavioural-model IR and its canonical text form.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::params::{Bound, ParamSymbol};
use crate::syntax::Location;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChanDecl {
    pub name: String,
    pub capacity: Bound,
    pub monitored: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ir {
    pub kind: IrKind,
    pub loc: Location,
}

impl Ir {
    pub fn new(kind: IrKind, loc: Location) -> Self {
        Ir { kind, loc }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guarded {
    /// A `SendIn` or `RecvIn`.
    pub guard: Box<Ir>,
    pub cont: Vec<Ir>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IrKind {
    SendIn(String),
    RecvIn(String),
    MonSendAck(String),
    MonClose(String),
    NDChoice(Vec<Vec<Ir>>),
    GuardedChoice { branches: Vec<Guarded>, default: Option<Vec<Ir>> },
    RunBlocking { proc: String, args: Vec<String> },
    RunAsync { proc: String, args: Vec<String> },
    BoundedFor { from: Bound, to: Bound, body: Vec<Ir> },
    /// Each iteration may run the body or exit.
    NDLoop(Vec<Ir>),
    /// Runs until a break or return.
    Forever(Vec<Ir>),
    /// Receive and run the body until the channel is closed and drained.
    RangeRecv { chan: String, body: Vec<Ir> },
    DeclareChan(ChanDecl),
    Skip,
    BreakLoop,
    Return,
}

impl IrKind {
    pub fn name(&self) -> &'static str {
        match self {
            IrKind::SendIn(_) => "SendIn",
            IrKind::RecvIn(_) => "RecvIn",
            IrKind::MonSendAck(_) => "MonSendAck",
            IrKind::MonClose(_) => "MonClose",
            IrKind::NDChoice(_) => "NDChoice",
            IrKind::GuardedChoice { .. } => "GuardedChoice",
            IrKind::RunBlocking { .. } => "RunBlocking",
            IrKind::RunAsync { .. } => "RunAsync",
            IrKind::BoundedFor { .. } => "BoundedFor",
            IrKind::NDLoop(_) => "NDLoop",
            IrKind::Forever(_) => "Forever",
            IrKind::RangeRecv { .. } => "RangeRecv",
            IrKind::DeclareChan(_) => "DeclareChan",
            IrKind::Skip => "Skip",
            IrKind::BreakLoop => "BreakLoop",
            IrKind::Return => "Return",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcDef {
    pub name: String,
    pub chan_params: Vec<String>,
    pub body: Vec<Ir>,
    pub completion_signal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviouralModel {
    /// Name of the entry function.
    pub name: String,
    pub entry: ProcDef,
    /// In discovery order from the entry body.
    pub procs: Vec<ProcDef>,
    pub channels: Vec<ChanDecl>,
    pub free_params: Vec<ParamSymbol>,
    /// Names of channels whose creation sites are monitored.
    pub monitored: BTreeSet<String>,
}

impl BehaviouralModel {
    pub fn proc(&self, name: &str) -> Option<&ProcDef> {
        self.procs.iter().find(|p| p.name == name)
    }

    pub fn all_procs(&self) -> impl Iterator<Item = &ProcDef> {
        std::iter::once(&self.entry).chain(&self.procs)
    }

    /// One constructor per line, nested bodies indented, locations as
    /// `@line:col`.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model {}", self.name);
        for p in &self.free_params {
            let _ = writeln!(
                out,
                "param {} {} @{}:{} {}",
                p.name,
                p.role,
                p.origin.line,
                p.origin.column,
                p.expr.as_deref().unwrap_or("_")
            );
        }
        for c in &self.channels {
            let _ = writeln!(out, "chan {} cap={} monitored={}", c.name, c.capacity, c.monitored);
        }
        for p in self.all_procs() {
            let _ = writeln!(
                out,
                "proc {}({}) completion={}",
                p.name,
                p.chan_params.join(", "),
                p.completion_signal
            );
            write_block(&mut out, &p.body, 1);
        }
        out
    }
}

fn write_block(out: &mut String, body: &[Ir], depth: usize) {
    for s in body {
        write_ir(out, s, depth);
    }
}

fn line(out: &mut String, depth: usize, text: &str, loc: &Location) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    let _ = writeln!(out, "{text} @{}:{}", loc.line, loc.column);
}

fn write_ir(out: &mut String, s: &Ir, depth: usize) {
    let name = s.kind.name();
    match &s.kind {
        IrKind::SendIn(c) | IrKind::RecvIn(c) | IrKind::MonSendAck(c) | IrKind::MonClose(c) => {
            line(out, depth, &format!("{name} {c}"), &s.loc)
        }
        IrKind::NDChoice(branches) => {
            line(out, depth, name, &s.loc);
            for b in branches {
                line(out, depth + 1, "branch", &s.loc);
                write_block(out, b, depth + 2);
            }
        }
        IrKind::GuardedChoice { branches, default } => {
            line(out, depth, name, &s.loc);
            for g in branches {
                line(out, depth + 1, "case", &g.guard.loc);
                write_ir(out, &g.guard, depth + 2);
                write_block(out, &g.cont, depth + 2);
            }
            if let Some(d) = default {
                line(out, depth + 1, "default", &s.loc);
                write_block(out, d, depth + 2);
            }
        }
        IrKind::RunBlocking { proc, args } | IrKind::RunAsync { proc, args } => {
            line(out, depth, &format!("{name} {proc}({})", args.join(", ")), &s.loc)
        }
        IrKind::BoundedFor { from, to, body } => {
            line(out, depth, &format!("{name} {from} {to}"), &s.loc);
            write_block(out, body, depth + 1);
        }
        IrKind::NDLoop(body) | IrKind::Forever(body) => {
            line(out, depth, name, &s.loc);
            write_block(out, body, depth + 1);
        }
        IrKind::RangeRecv { chan, body } => {
            line(out, depth, &format!("{name} {chan}"), &s.loc);
            write_block(out, body, depth + 1);
        }
        IrKind::DeclareChan(c) => line(
            out,
            depth,
            &format!("{name} {} cap={} monitored={}", c.name, c.capacity, c.monitored),
            &s.loc,
        ),
        IrKind::Skip | IrKind::BreakLoop | IrKind::Return => line(out, depth, name, &s.loc),
    }
}

/// Pre-order walk with the chain of enclosing constructors.
pub fn walk_ir<'a>(body: &'a [Ir], f: &mut dyn FnMut(&'a Ir, &[&'a Ir])) {
    fn go<'a>(body: &'a [Ir], stack: &mut Vec<&'a Ir>, f: &mut dyn FnMut(&'a Ir, &[&'a Ir])) {
        for s in body {
            f(s, stack);
            stack.push(s);
            match &s.kind {
                IrKind::NDChoice(bs) => bs.iter().for_each(|b| go(b, stack, f)),
                IrKind::GuardedChoice { branches, default } => {
                    for g in branches {
                        go(std::slice::from_ref(&*g.guard), stack, f);
                        go(&g.cont, stack, f);
                    }
                    if let Some(d) = default {
                        go(d, stack, f);
                    }
                }
                IrKind::BoundedFor { body, .. }
                | IrKind::NDLoop(body)
                | IrKind::Forever(body)
                | IrKind::RangeRecv { body, .. } => go(body, stack, f),
                _ => {}
            }
            stack.pop();
        }
    }
    go(body, &mut Vec::new(), f)
}
