//! Translation of one partition into a [`BehaviouralModel`].

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use crate::params::{lookup, spawns, Bound, ParamEnv, Role, SymbolTable};
use crate::syntax::{Arg, Comm, Expr, FuncDecl, Location, LoopControl, Program, Stmt, StmtKind};

use super::ir::*;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("{location}: call to undeclared function '{name}' with channel arguments")]
    UnknownFunction { name: String, location: Location },
    #[error("{location}: {what}")]
    UnsupportedStatement { what: String, location: Location },
}

/// Declarations without channel parameters, in declaration order.
pub fn partition_program(p: &Program) -> Vec<&FuncDecl> {
    p.decls.iter().filter(|d| !d.has_chan_params()).collect()
}

pub const ASYNC_PREFIX: &str = "go_";

/// Channel-carrying calls and spawns of `body`: (callee, channel args, is_go, loc).
fn chan_calls(body: &[Stmt]) -> Vec<(&str, Vec<&str>, bool, &Location)> {
    let mut out = Vec::new();
    crate::syntax::walk_stmts(body, &mut |s| match &s.kind {
        StmtKind::Call { callee, args } | StmtKind::Go { callee, args } => {
            let chans: Vec<&str> = args.iter().filter_map(Arg::as_chan).collect();
            if !chans.is_empty() {
                out.push((callee.as_str(), chans, matches!(s.kind, StmtKind::Go { .. }), &s.loc));
            }
        }
        _ => {}
    });
    out
}

/// Creation sites reaching each (function, channel variable), and the
/// sites some close may act on.
struct Aliasing {
    flows: BTreeMap<(String, String), BTreeSet<String>>,
    closed: BTreeSet<String>,
}

impl Aliasing {
    fn compute(p: &Program, funcs: &[&FuncDecl]) -> Self {
        let mut flows: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
        for f in funcs {
            crate::syntax::walk_stmts(&f.body, &mut |s| {
                if let StmtKind::MakeChan { name, .. } = &s.kind {
                    flows.entry((f.name.clone(), name.clone())).or_default().insert(name.clone());
                }
            });
        }
        loop {
            let mut changed = false;
            for f in funcs {
                for (callee, chans, _, _) in chan_calls(&f.body) {
                    let Some(g) = p.func(callee) else { continue };
                    for (param, arg) in g.chan_params().zip(&chans) {
                        let src = flows.get(&(f.name.clone(), arg.to_string())).cloned().unwrap_or_default();
                        let dst = flows.entry((g.name.clone(), param.name.clone())).or_default();
                        for site in src {
                            changed |= dst.insert(site);
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut closed = BTreeSet::new();
        for f in funcs {
            crate::syntax::walk_stmts(&f.body, &mut |s| {
                if let StmtKind::Close { chan } = &s.kind {
                    if let Some(sites) = flows.get(&(f.name.clone(), chan.clone())) {
                        closed.extend(sites.iter().cloned());
                    }
                }
            });
        }
        Aliasing { flows, closed }
    }

    fn monitored(&self, func: &str, var: &str) -> bool {
        self.flows
            .get(&(func.to_string(), var.to_string()))
            .is_some_and(|sites| sites.iter().any(|s| self.closed.contains(s)))
    }
}

/// Functions reachable from `entry` through channel-carrying calls.
fn reachable<'a>(entry: &'a FuncDecl, p: &'a Program) -> Vec<&'a FuncDecl> {
    let mut seen = vec![entry.name.as_str()];
    let mut out = vec![entry];
    let mut i = 0;
    while i < out.len() {
        for (callee, _, _, _) in chan_calls(&out[i].body) {
            if let Some(g) = p.func(callee) {
                if !seen.contains(&g.name.as_str()) {
                    seen.push(&g.name);
                    out.push(g);
                }
            }
        }
        i += 1;
    }
    out
}

struct Ctx<'a> {
    program: &'a Program,
    aliasing: Aliasing,
    table: SymbolTable,
    func: String,
    queued: HashSet<String>,
    pending: VecDeque<(String, bool)>,
}

/// Result of translating a statement list.
pub type Translated = (ParamEnv, Vec<Ir>);

impl Ctx<'_> {
    fn trans_stmts(&mut self, env: &ParamEnv, stmts: &[Stmt]) -> Result<Translated, BuildError> {
        let mut env = env.clone();
        let mut out = Vec::new();
        for s in stmts {
            env = self.trans_stmt(env, s, &mut out)?;
        }
        Ok((env, out))
    }

    /// Translate a branch whose environment changes are discarded.
    fn branch(&mut self, env: &ParamEnv, stmts: &[Stmt], loc: &Location) -> Result<Vec<Ir>, BuildError> {
        let (_, mut ir) = self.trans_stmts(env, stmts)?;
        if ir.is_empty() {
            ir.push(Ir::new(IrKind::Skip, loc.clone()));
        }
        Ok(ir)
    }

    fn send(&self, chan: &str, loc: &Location, out: &mut Vec<Ir>) {
        out.push(Ir::new(IrKind::SendIn(chan.to_string()), loc.clone()));
        if self.aliasing.monitored(&self.func, chan) {
            out.push(Ir::new(IrKind::MonSendAck(chan.to_string()), loc.clone()));
        }
    }

    fn call(&mut self, callee: &str, args: &[Arg], go: bool, loc: &Location) -> Result<IrKind, BuildError> {
        let chans: Vec<String> = args.iter().filter_map(Arg::as_chan).map(str::to_string).collect();
        if chans.is_empty() {
            return Ok(IrKind::Skip);
        }
        let Some(decl) = self.program.func(callee)
        else {
            return Err(BuildError::UnknownFunction { name: callee.to_string(), location: loc.clone() });
        };
        let expected = decl.chan_params().count();
        if expected != chans.len() {
            return Err(BuildError::UnsupportedStatement {
                what: format!(
                    "call passes {} channels to '{callee}', which takes {expected}",
                    chans.len()
                ),
                location: loc.clone(),
            });
        }
        let proc = if go { format!("{ASYNC_PREFIX}{callee}") } else { callee.to_string() };
        if self.queued.insert(proc.clone()) {
            self.pending.push_back((callee.to_string(), !go));
        }
        Ok(if go { IrKind::RunAsync { proc, args: chans } } else { IrKind::RunBlocking { proc, args: chans } })
    }

    fn trans_loop(
        &mut self,
        env: ParamEnv,
        control: &LoopControl,
        body: &[Stmt],
        loc: &Location,
        out: &mut Vec<Ir>,
    ) -> Result<ParamEnv, BuildError> {
        let spawning = spawns(body, self.program, true).unwrap_or(true);
        if control.is_unconditional() && !spawning {
            let (_, ir) = self.trans_stmts(&env, body)?;
            out.push(Ir::new(IrKind::Forever(ir), loc.clone()));
            return Ok(env);
        }
        let l = lookup(&env, control, &mut self.table, loc, Role::LoopBound);
        if spawning || (l.recognized && l.env == env) {
            let (_, ir) = self.trans_stmts(&l.env, body)?;
            out.push(Ir::new(IrKind::BoundedFor { from: l.lower, to: l.upper, body: ir }, loc.clone()));
            Ok(l.env)
        } else {
            let (_, ir) = self.trans_stmts(&env, body)?;
            out.push(Ir::new(IrKind::NDLoop(ir), loc.clone()));
            Ok(env)
        }
    }

    fn trans_stmt(&mut self, env: ParamEnv, s: &Stmt, out: &mut Vec<Ir>) -> Result<ParamEnv, BuildError> {
        let loc = &s.loc;
        let push = |out: &mut Vec<Ir>, k: IrKind| out.push(Ir::new(k, loc.clone()));
        match &s.kind {
            StmtKind::MakeChan { name, capacity } => {
                let control = LoopControl::counting_up_to("_cap", capacity.clone());
                let l = lookup(&env, &control, &mut self.table, loc, Role::Capacity);
                let capacity = match l.upper {
                    Bound::Lit(n) => Bound::Lit(n.max(0)),
                    b => b,
                };
                let monitored = self.aliasing.closed.contains(name);
                push(out, IrKind::DeclareChan(ChanDecl { name: name.clone(), capacity, monitored }));
                return Ok(l.env);
            }
            StmtKind::Send { chan, .. } => self.send(chan, loc, out),
            StmtKind::Recv { chan, .. } => push(out, IrKind::RecvIn(chan.clone())),
            StmtKind::Close { chan } => push(out, IrKind::MonClose(chan.clone())),
            StmtKind::Select { cases, default } => {
                let mut branches = Vec::new();
                for c in cases {
                    let mut prefix = Vec::new();
                    let guard = match &c.comm {
                        Comm::Send { chan, .. } => {
                            self.send(chan, &c.loc, &mut prefix);
                            prefix.remove(0)
                        }
                        Comm::Recv { chan, .. } => Ir::new(IrKind::RecvIn(chan.clone()), c.loc.clone()),
                    };
                    let (_, body) = self.trans_stmts(&env, &c.body)?;
                    prefix.extend(body);
                    branches.push(Guarded { guard: Box::new(guard), cont: prefix });
                }
                let default = match default {
                    Some(d) => Some(self.trans_stmts(&env, d)?.1),
                    None => None,
                };
                push(out, IrKind::GuardedChoice { branches, default });
            }
            StmtKind::Call { callee, args } => {
                let k = self.call(callee, args, false, loc)?;
                push(out, k);
            }
            StmtKind::Go { callee, args } => {
                let k = self.call(callee, args, true, loc)?;
                push(out, k);
            }
            StmtKind::Block(b) => {
                let (env, ir) = self.trans_stmts(&env, b)?;
                out.extend(ir);
                return Ok(env);
            }
            StmtKind::If { then_branch, else_branch, .. } => {
                let a = self.branch(&env, then_branch, loc)?;
                let b = self.branch(&env, else_branch, loc)?;
                push(out, IrKind::NDChoice(vec![a, b]));
            }
            StmtKind::For { control, body } => return self.trans_loop(env, control, body, loc, out),
            StmtKind::ForRange { key, over, body, .. } => {
                let bound = match over {
                    Expr::IntLit(n) => Expr::IntLit(*n),
                    e => Expr::opaque(format!("len({})", e.text())),
                };
                let control = LoopControl::counting_up_to(key.as_deref().unwrap_or("_i"), bound);
                return self.trans_loop(env, &control, body, loc, out);
            }
            StmtKind::RangeChan { chan, body, .. } => {
                let (_, ir) = self.trans_stmts(&env, body)?;
                push(out, IrKind::RangeRecv { chan: chan.clone(), body: ir });
            }
            StmtKind::Switch { branches, has_default } => {
                let mut ir = Vec::new();
                for b in branches {
                    ir.push(self.branch(&env, b, loc)?);
                }
                if !has_default {
                    ir.push(vec![Ir::new(IrKind::Skip, loc.clone())]);
                }
                push(out, IrKind::NDChoice(ir));
            }
            StmtKind::Break => push(out, IrKind::BreakLoop),
            StmtKind::Return => push(out, IrKind::Return),
            StmtKind::Assign { .. } => {}
        }
        Ok(env)
    }

    fn proc_body(&mut self, decl: &FuncDecl) -> Result<Vec<Ir>, BuildError> {
        self.func = decl.name.clone();
        let (_, mut body) = self.trans_stmts(&ParamEnv::new(), &decl.body)?;
        if body.is_empty() {
            body.push(Ir::new(IrKind::Skip, decl.loc.clone()));
        }
        Ok(body)
    }
}

fn referenced_symbols(body: &[Ir], out: &mut BTreeSet<String>) {
    walk_ir(body, &mut |s, _| {
        let bounds: Vec<&Bound> = match &s.kind {
            IrKind::BoundedFor { from, to, .. } => vec![from, to],
            IrKind::DeclareChan(c) => vec![&c.capacity],
            _ => Vec::new(),
        };
        for b in bounds {
            if let Bound::Sym(n) = b {
                out.insert(n.clone());
            }
        }
    });
}

pub fn build_model(entry: &FuncDecl, p: &Program) -> Result<BehaviouralModel, BuildError> {
    let funcs = reachable(entry, p);
    let mut ctx = Ctx {
        program: p,
        aliasing: Aliasing::compute(p, &funcs),
        table: SymbolTable::new(),
        func: String::new(),
        queued: HashSet::new(),
        pending: VecDeque::new(),
    };
    let entry_body = ctx.proc_body(entry)?;
    let mut procs = Vec::new();
    while let Some((callee, blocking)) = ctx.pending.pop_front() {
        let decl = p.func(&callee).expect("queued callees are declared");
        let body = ctx.proc_body(decl)?;
        procs.push(ProcDef {
            name: if blocking { callee.clone() } else { format!("{ASYNC_PREFIX}{callee}") },
            chan_params: decl.chan_params().map(|q| q.name.clone()).collect(),
            body,
            completion_signal: blocking,
        });
    }
    let entry = ProcDef { name: entry.name.clone(), chan_params: Vec::new(), body: entry_body, completion_signal: false };

    let mut channels = Vec::new();
    let mut used = BTreeSet::new();
    for proc in std::iter::once(&entry).chain(&procs) {
        walk_ir(&proc.body, &mut |s, _| {
            if let IrKind::DeclareChan(c) = &s.kind {
                if !channels.iter().any(|d: &ChanDecl| d.name == c.name) {
                    channels.push(c.clone());
                }
            }
        });
        referenced_symbols(&proc.body, &mut used);
    }
    let free_params = ctx.table.symbols().iter().filter(|s| used.contains(&s.name)).cloned().collect();
    let monitored = channels.iter().filter(|c| c.monitored).map(|c| c.name.clone()).collect();
    Ok(BehaviouralModel { name: entry.name.clone(), entry, procs, channels, free_params, monitored })
}
