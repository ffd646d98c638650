//! Promela rendering of behavioural models with all parameters substituted.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::checker::{Bounds, CheckError};
use crate::model::{BehaviouralModel, Ir, IrKind, ProcDef};
use crate::params::Bound;

const MONITOR: &str = "\
proctype chanMonitor(Chandef ch) {
end_open:
\tdo
\t:: ch.sending!false
\t:: ch.closing!true -> goto end_closed
\tod;
end_closed:
\tdo
\t:: ch.in!0
\t:: ch.sending!false -> assert(false)
\t:: ch.closing!true -> assert(false)
\tod
}
";

const TYPEDEF: &str = "\
typedef Chandef {
\tchan in;
\tchan sending = [0] of {bool};
\tchan closing = [0] of {bool}
}
";

/// File name for the `index`-th partition of a file.
pub fn file_name(entry: &str, index: usize) -> String {
    format!("{entry}_{index}.pml")
}

fn value(b: &Bound, bounds: &Bounds) -> Result<i64, CheckError> {
    match b {
        Bound::Lit(n) => Ok(*n),
        Bound::Sym(s) => bounds
            .values
            .get(s)
            .map(|v| i64::try_from(*v).unwrap_or(i64::MAX))
            .ok_or_else(|| CheckError::MissingBound(s.clone())),
    }
}

fn comment(b: &Bound) -> String {
    match b {
        Bound::Lit(_) => String::new(),
        Bound::Sym(s) => format!(" /* {s} */"),
    }
}

pub fn emit_model(m: &BehaviouralModel, bounds: &Bounds) -> Result<String, CheckError> {
    let mut out = String::new();
    let _ = writeln!(out, "// model rooted at {}", m.name);
    for p in &m.free_params {
        let v = value(&Bound::Sym(p.name.clone()), bounds)?;
        let _ = writeln!(
            out,
            "int {} = {v}; // {} {} at {}:{}",
            p.name,
            p.role,
            p.expr.as_deref().unwrap_or("unrecognized loop"),
            p.origin.line,
            p.origin.column
        );
    }
    out.push('\n');
    out.push_str(TYPEDEF);
    if !m.monitored.is_empty() {
        out.push('\n');
        out.push_str(MONITOR);
    }
    for p in emission_order(m) {
        out.push('\n');
        let params: Vec<String> = p.chan_params.iter().map(|c| format!("Chandef {c}")).collect();
        let mut params = params.join("; ");
        if p.completion_signal {
            if !params.is_empty() {
                params.push_str("; ");
            }
            params.push_str("chan done");
        }
        let _ = writeln!(out, "proctype {}({params}) {{", p.name);
        body(&mut out, p, bounds)?;
        out.push_str("}\n");
    }
    out.push_str("\ninit {\n");
    body(&mut out, &m.entry, bounds)?;
    out.push_str("}\n");
    Ok(out)
}

/// Processes before the processes that start them.
fn emission_order(m: &BehaviouralModel) -> Vec<&ProcDef> {
    fn visit<'a>(m: &'a BehaviouralModel, p: &'a ProcDef, seen: &mut BTreeSet<&'a str>, out: &mut Vec<&'a ProcDef>) {
        let mut callees = Vec::new();
        crate::model::walk_ir(&p.body, &mut |s, _| {
            if let IrKind::RunBlocking { proc, .. } | IrKind::RunAsync { proc, .. } = &s.kind {
                callees.push(proc.as_str());
            }
        });
        for c in callees {
            if let Some(q) = m.proc(c) {
                if seen.insert(&q.name) {
                    visit(m, q, seen, out);
                    out.push(q);
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    visit(m, &m.entry, &mut seen, &mut out);
    out
}

struct Emitter<'a> {
    out: String,
    bounds: &'a Bounds,
    loops: usize,
    children: usize,
}

fn body(out: &mut String, p: &ProcDef, bounds: &Bounds) -> Result<(), CheckError> {
    let mut e = Emitter { out: String::new(), bounds, loops: 0, children: 0 };
    e.block(&p.body, 1)?;
    out.push_str("\tbool state;\n");
    for i in 0..e.loops {
        let _ = writeln!(out, "\tint i{i};");
    }
    out.push_str(&e.out);
    out.push_str("stop_process:\n");
    if p.completion_signal {
        out.push_str("\tdone!0\n");
    } else {
        out.push_str("\tskip\n");
    }
    Ok(())
}

impl Emitter<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push('\t');
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn block(&mut self, body: &[Ir], depth: usize) -> Result<(), CheckError> {
        if body.is_empty() {
            self.line(depth, "skip;");
        }
        for s in body {
            self.stmt(s, depth)?;
        }
        Ok(())
    }

    /// An option arm `:: head -> body`.
    fn arm(&mut self, head: &str, body: &[Ir], depth: usize) -> Result<(), CheckError> {
        self.line(depth, &format!(":: {head} ->"));
        self.block(body, depth + 1)
    }

    fn stmt(&mut self, s: &Ir, d: usize) -> Result<(), CheckError> {
        match &s.kind {
            IrKind::SendIn(c) => self.line(d, &format!("{c}.in!0;")),
            IrKind::RecvIn(c) => self.line(d, &format!("{c}.in?0;")),
            IrKind::MonSendAck(c) => self.line(d, &format!("{c}.sending?state;")),
            IrKind::MonClose(c) => self.line(d, &format!("{c}.closing?state;")),
            IrKind::NDChoice(branches) => {
                self.line(d, "if");
                for b in branches {
                    self.arm("true", b, d)?;
                }
                self.line(d, "fi;");
            }
            IrKind::GuardedChoice { branches, default } => {
                self.line(d, "if");
                for g in branches {
                    let head = match &g.guard.kind {
                        IrKind::SendIn(c) => format!("{c}.in!0"),
                        IrKind::RecvIn(c) => format!("{c}.in?0"),
                        other => other.name().to_string(),
                    };
                    self.arm(&head, &g.cont, d)?;
                }
                if let Some(b) = default {
                    self.arm("true", b, d)?;
                }
                self.line(d, "fi;");
            }
            IrKind::RunBlocking { proc, args } => {
                let ch = format!("child{}", self.children);
                self.children += 1;
                let mut a = args.clone();
                a.push(ch.clone());
                self.line(d, &format!("chan {ch} = [0] of {{int}};"));
                self.line(d, &format!("run {proc}({});", a.join(", ")));
                self.line(d, &format!("{ch}?0;"));
            }
            IrKind::RunAsync { proc, args } => self.line(d, &format!("run {proc}({});", args.join(", "))),
            IrKind::BoundedFor { from, to, body } => {
                let i = self.loops;
                self.loops += 1;
                let lo = value(from, self.bounds)?;
                let hi = value(to, self.bounds)?;
                self.line(d, &format!("for (i{i} : {lo} .. {hi} - 1) {{{}{}", comment(from), comment(to)));
                self.block(body, d + 1)?;
                self.line(d, "};");
            }
            IrKind::NDLoop(body) => {
                self.line(d, "do");
                self.arm("true", body, d)?;
                self.line(d, ":: true -> break");
                self.line(d, "od;");
            }
            IrKind::Forever(body) => {
                self.line(d, "do");
                self.arm("true", body, d)?;
                self.line(d, "od;");
            }
            IrKind::RangeRecv { chan, body } => {
                self.line(d, "do");
                self.arm(&format!("{chan}.in?0"), body, d)?;
                self.line(d, ":: true -> break");
                self.line(d, "od;");
            }
            IrKind::DeclareChan(c) => {
                let cap = value(&c.capacity, self.bounds)?.max(0);
                self.line(d, &format!("Chandef {};", c.name));
                self.line(d, &format!("chan {}_in = [{cap}] of {{int}};{}", c.name, comment(&c.capacity)));
                self.line(d, &format!("{0}.in = {0}_in;", c.name));
                if c.monitored {
                    self.line(d, &format!("run chanMonitor({});", c.name));
                }
            }
            IrKind::Skip => self.line(d, "skip;"),
            IrKind::BreakLoop => self.line(d, "break;"),
            IrKind::Return => self.line(d, "goto stop_process;"),
        }
        Ok(())
    }
}
