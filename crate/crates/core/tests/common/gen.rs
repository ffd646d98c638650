//! Seeded generators for random behavioural models and MiniGo sources.

use std::collections::BTreeSet;

use minigo_verify::model::{BehaviouralModel, ChanDecl, Guarded, Ir, IrKind, ProcDef};
use minigo_verify::params::Bound;
use minigo_verify::syntax::Location;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn ir(kind: IrKind) -> Ir {
    Ir::new(kind, Location::unknown())
}

struct Callee {
    name: String,
    blocking: bool,
    arity: usize,
    /// Creates goroutines, directly or through the calls it makes.
    spawns: bool,
}

struct ModelGen<'r> {
    rng: &'r mut ChaCha8Rng,
    budget: usize,
    chans: Vec<String>,
    callees: Vec<Callee>,
}

impl ModelGen<'_> {
    fn chan(&mut self) -> String {
        self.chans.choose(self.rng).unwrap().clone()
    }

    fn block(&mut self, max: usize, in_loop: bool, unbounded: bool) -> Vec<Ir> {
        let n = self.rng.gen_range(0..=max);
        let mut out = Vec::new();
        for _ in 0..n {
            if self.budget == 0 {
                break;
            }
            self.budget -= 1;
            self.stmt(&mut out, in_loop, unbounded);
        }
        out
    }

    fn stmt(&mut self, out: &mut Vec<Ir>, in_loop: bool, unbounded: bool) {
        let pick = self.rng.gen_range(0..100);
        let c = self.chan();
        let kind = match pick {
            0..=17 => {
                out.push(ir(IrKind::SendIn(c.clone())));
                if self.budget > 0 && self.rng.gen_bool(0.6) {
                    self.budget -= 1;
                    IrKind::MonSendAck(c)
                } else {
                    return;
                }
            }
            18..=33 => IrKind::RecvIn(c),
            34..=41 => IrKind::MonClose(c),
            42..=44 => IrKind::MonSendAck(c),
            45..=50 => {
                let a = self.block(2, in_loop, unbounded);
                let b = self.block(2, in_loop, unbounded);
                IrKind::NDChoice(vec![a, b])
            }
            51..=58 => {
                let mut branches = Vec::new();
                for k in 0..self.rng.gen_range(1..=2) {
                    // The first guard is paid for by the choice itself.
                    if k > 0 {
                        if self.budget == 0 {
                            break;
                        }
                        self.budget -= 1;
                    }
                    let ch = self.chan();
                    let mut cont = Vec::new();
                    let guard = if self.rng.gen_bool(0.5) {
                        if self.budget > 0 && self.rng.gen_bool(0.6) {
                            self.budget -= 1;
                            cont.push(ir(IrKind::MonSendAck(ch.clone())));
                        }
                        IrKind::SendIn(ch)
                    } else {
                        IrKind::RecvIn(ch)
                    };
                    cont.extend(self.block(1, in_loop, unbounded));
                    branches.push(Guarded { guard: Box::new(ir(guard)), cont });
                }
                let default = self.rng.gen_bool(0.3).then(|| self.block(1, in_loop, unbounded));
                IrKind::GuardedChoice { branches, default }
            }
            59..=70 if !self.callees.is_empty() => {
                let i = self.rng.gen_range(0..self.callees.len());
                if unbounded && self.callees[i].spawns {
                    IrKind::Skip
                } else {
                    let args = (0..self.callees[i].arity).map(|_| self.chan()).collect();
                    let proc = self.callees[i].name.clone();
                    if self.callees[i].blocking {
                        IrKind::RunBlocking { proc, args }
                    } else {
                        IrKind::RunAsync { proc, args }
                    }
                }
            }
            71..=77 => {
                let to = self.rng.gen_range(0..=2);
                let body = self.block(2, true, unbounded);
                IrKind::BoundedFor { from: Bound::Lit(0), to: Bound::Lit(to), body }
            }
            78..=83 => IrKind::NDLoop(self.block(2, true, true)),
            84..=86 => {
                let mut body = self.block(2, true, true);
                if self.budget > 0 && self.rng.gen_bool(0.7) {
                    self.budget -= 1;
                    body.push(ir(IrKind::BreakLoop));
                }
                IrKind::Forever(body)
            }
            87..=91 => IrKind::RangeRecv { chan: c, body: self.block(1, true, true) },
            92..=95 if in_loop => IrKind::BreakLoop,
            96..=97 => IrKind::Return,
            _ => IrKind::Skip,
        };
        out.push(ir(kind));
    }
}

fn spawns_in(body: &[Ir], callees: &[Callee]) -> bool {
    let mut found = false;
    minigo_verify::model::walk_ir(body, &mut |ir, _| match &ir.kind {
        IrKind::RunAsync { .. } => found = true,
        IrKind::RunBlocking { proc, .. } => found |= callees.iter().any(|c| c.name == *proc && c.spawns),
        _ => {}
    });
    found
}

/// A random model with at most three process definitions, two channels of
/// capacity at most one and six statements per definition.
pub fn random_model(rng: &mut ChaCha8Rng) -> BehaviouralModel {
    let nchan = rng.gen_range(1..=2);
    let channels: Vec<ChanDecl> = (0..nchan)
        .map(|i| ChanDecl { name: format!("c{i}"), capacity: Bound::Lit(rng.gen_range(0..=1)), monitored: true })
        .collect();
    let nprocs = rng.gen_range(0..=2);
    let mut procs: Vec<ProcDef> = Vec::new();
    let mut callees: Vec<Callee> = Vec::new();
    // Later definitions may call earlier ones, so the call graph is acyclic.
    for k in 0..nprocs {
        let blocking = rng.gen_bool(0.5);
        let arity = rng.gen_range(1..=2);
        let params: Vec<String> = ["a", "b"][..arity].iter().map(|s| s.to_string()).collect();
        let name = if blocking { format!("p{k}") } else { format!("go_p{k}") };
        let mut g = ModelGen { rng, budget: 6, chans: params.clone(), callees: std::mem::take(&mut callees) };
        let mut body = g.block(6, false, false);
        callees = std::mem::take(&mut g.callees);
        if body.is_empty() {
            body.push(ir(IrKind::Skip));
        }
        let spawns = !blocking || spawns_in(&body, &callees);
        procs.push(ProcDef { name: name.clone(), chan_params: params, body, completion_signal: blocking });
        callees.push(Callee { name, blocking, arity, spawns });
    }
    let names: Vec<String> = channels.iter().map(|c| c.name.clone()).collect();
    let mut body: Vec<Ir> = channels.iter().map(|c| ir(IrKind::DeclareChan(c.clone()))).collect();
    let mut g = ModelGen { rng, budget: 6 - nchan, chans: names.clone(), callees };
    body.extend(g.block(6, false, false));
    procs.reverse();
    BehaviouralModel {
        name: "main".into(),
        entry: ProcDef { name: "main".into(), chan_params: Vec::new(), body, completion_signal: false },
        procs,
        channels,
        free_params: Vec::new(),
        monitored: names.into_iter().collect::<BTreeSet<_>>(),
    }
}

/// Random MiniGo source exercising spawning and non-spawning loops of
/// several shapes, branches, selects and helper calls.
pub fn random_program(rng: &mut ChaCha8Rng) -> String {
    let body = random_stmts(rng, 1..=4);
    program_with(rng, &body)
}

/// Statements for the body of `main`, one tab deep.
pub fn random_stmts(rng: &mut ChaCha8Rng, count: std::ops::RangeInclusive<usize>) -> String {
    let mut out = String::new();
    for _ in 0..rng.gen_range(count) {
        program_stmt(rng, &mut out, 1, 2);
    }
    out
}

/// Wrap `body` into a program declaring `worker`, `helper` and channel `c`.
pub fn program_with(rng: &mut ChaCha8Rng, body: &str) -> String {
    let cap = *["0", "1", "n", "2"].choose(rng).unwrap();
    format!(
        "package main\n\nfunc worker(c chan int) {{\n\tc <- 1\n}}\n\n\
         func helper(c chan int) {{\n\t<-c\n}}\n\n\
         func main() {{\n\tn := 3\n\tx := 0\n\tc := make(chan int, {cap})\n{body}}}\n"
    )
}

fn program_stmt(rng: &mut ChaCha8Rng, out: &mut String, indent: usize, depth: usize) {
    let tab = "\t".repeat(indent);
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        let s = *[
            "c <- 1",
            "<-c",
            "x = <-c",
            "go worker(c)",
            "helper(c)",
            "x = x + 1",
            "d := make(chan int, n)",
            "close(c)",
        ]
        .choose(rng)
        .unwrap();
        out.push_str(&format!("{tab}{s}\n"));
        return;
    }
    let head = match rng.gen_range(0..8) {
        0 => "for i := 0; i < n; i++ {".to_string(),
        1 => "for i := 0; i < len(files); i++ {".to_string(),
        2 => "for i := 0; i <= 4; i++ {".to_string(),
        3 => "for x < 10 {".to_string(),
        4 => "for {".to_string(),
        5 => "if x > 0 {".to_string(),
        6 => "for i := n; i > 0; i-- {".to_string(),
        _ => "select {\n".to_string() + &tab + "case c <- 2:",
    };
    out.push_str(&format!("{tab}{head}\n"));
    for _ in 0..rng.gen_range(1..=3) {
        program_stmt(rng, out, indent + 1, depth - 1);
    }
    if head == "for {" {
        out.push_str(&format!("{tab}\tbreak\n"));
    }
    if head.starts_with("if") && rng.gen_bool(0.5) {
        out.push_str(&format!("{tab}}} else {{\n"));
        program_stmt(rng, out, indent + 1, depth - 1);
    }
    out.push_str(&format!("{tab}}}\n"));
}

/// Statements of a body, counting select guards and nested statements.
pub fn ir_size(body: &[Ir]) -> usize {
    body.iter()
        .map(|s| {
            1 + match &s.kind {
                IrKind::NDChoice(bs) => bs.iter().map(|b| ir_size(b)).sum(),
                IrKind::GuardedChoice { branches, default } => {
                    branches.iter().map(|g| ir_size(&g.cont)).sum::<usize>()
                        + branches.len().saturating_sub(1)
                        + default.as_deref().map_or(0, ir_size)
                }
                IrKind::BoundedFor { body, .. }
                | IrKind::NDLoop(body)
                | IrKind::Forever(body)
                | IrKind::RangeRecv { body, .. } => ir_size(body),
                _ => 0,
            }
        })
        .sum()
}
