//! Checks for the standing assumptions of the model extraction: distinct
//! variable names, no channels inside value expressions, and no recursion
//! through functions that spawn goroutines.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateName { name: String, location: Location },
    ChannelInExpr { name: String, location: Location },
    RecursiveSpawn { function: String, location: Location },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateName { name, location } => {
                write!(f, "{location}: name '{name}' is declared more than once")
            }
            Violation::ChannelInExpr { name, location } => {
                write!(f, "{location}: channel '{name}' is used inside a value expression")
            }
            Violation::RecursiveSpawn { function, location } => {
                write!(f, "{location}: recursive function '{function}' spawns goroutines")
            }
        }
    }
}

pub fn validate_assumptions(p: &Program) -> Vec<Violation> {
    let mut out = duplicate_names(p);
    for d in &p.decls {
        channels_in_exprs(d, &mut out);
    }
    out.extend(recursive_spawns(p));
    out
}

/// A channel parameter bound at every call site to an argument of the same
/// name is the caller's variable passed through, not a new declaration.
fn passthrough_params(p: &Program) -> HashSet<(String, usize)> {
    let mut sites: HashMap<(String, usize), bool> = HashMap::new();
    for d in &p.decls {
        walk_stmts(&d.body, &mut |s| {
            let (StmtKind::Call { callee, args } | StmtKind::Go { callee, args }) = &s.kind else {
                return;
            };
            let Some(target) = p.func(callee) else { return };
            for (i, (param, arg)) in target.params.iter().zip(args).enumerate() {
                let same = arg.as_chan() == Some(param.name.as_str());
                let entry = sites.entry((callee.clone(), i)).or_insert(true);
                *entry &= same;
            }
        });
    }
    sites.into_iter().filter(|(_, all_same)| *all_same).map(|(k, _)| k).collect()
}

fn duplicate_names(p: &Program) -> Vec<Violation> {
    let passthrough = passthrough_params(p);
    let mut decls: Vec<(String, Location)> = Vec::new();
    for d in &p.decls {
        for (i, param) in d.params.iter().enumerate() {
            if !passthrough.contains(&(d.name.clone(), i)) {
                decls.push((param.name.clone(), d.loc.clone()));
            }
        }
        walk_stmts(&d.body, &mut |s| {
            let mut add = |n: &str| decls.push((n.to_string(), s.loc.clone()));
            match &s.kind {
                StmtKind::MakeChan { name, .. } => add(name),
                StmtKind::Assign { targets, define: true, .. } => targets.iter().for_each(|t| add(t)),
                StmtKind::For { control, .. } => {
                    if let Some((v, _)) = &control.init {
                        add(v)
                    }
                }
                StmtKind::ForRange { key, value, .. } => {
                    key.iter().chain(value.iter()).for_each(|v| add(v));
                }
                StmtKind::RangeChan { target: Some(t), .. } => add(t),
                _ => {}
            }
        });
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let mut reported: HashSet<&str> = HashSet::new();
    let mut out = Vec::new();
    for (name, loc) in &decls {
        if name.starts_with('_') {
            continue;
        }
        if !seen.insert(name) && reported.insert(name) {
            out.push(Violation::DuplicateName { name: name.clone(), location: loc.clone() });
        }
    }
    out
}

fn channels_in_exprs(d: &FuncDecl, out: &mut Vec<Violation>) {
    let mut chans: HashSet<&str> = d.chan_params().map(|p| p.name.as_str()).collect();
    walk_stmts(&d.body, &mut |s| {
        if let StmtKind::MakeChan { name, .. } = &s.kind {
            chans.insert(name);
        }
    });
    walk_stmts(&d.body, &mut |s| {
        let mut exprs: Vec<&Expr> = Vec::new();
        match &s.kind {
            StmtKind::MakeChan { capacity, .. } => exprs.push(capacity),
            StmtKind::Send { value, .. } => exprs.push(value),
            StmtKind::Select { cases, .. } => {
                for c in cases {
                    if let Comm::Send { value, .. } = &c.comm {
                        exprs.push(value);
                    }
                }
            }
            StmtKind::Call { args, .. } | StmtKind::Go { args, .. } => {
                exprs.extend(args.iter().filter_map(|a| match a {
                    Arg::Value(e) => Some(e),
                    Arg::Chan(_) => None,
                }));
            }
            StmtKind::If { cond, .. } => exprs.push(cond),
            StmtKind::For { control, .. } => {
                if let Some((_, e)) = &control.init {
                    exprs.push(e);
                }
                match &control.cond {
                    Some(Condition::Compare { bound, .. }) => exprs.push(bound),
                    Some(Condition::Other(e)) => exprs.push(e),
                    None => {}
                }
            }
            StmtKind::ForRange { over, .. } => exprs.push(over),
            StmtKind::Assign { value: Some(v), .. } => exprs.push(v),
            _ => {}
        }
        let mut names = BTreeSet::new();
        for e in exprs {
            names.extend(e.idents().into_iter().filter(|i| chans.contains(i)));
        }
        for n in names {
            out.push(Violation::ChannelInExpr { name: n.to_string(), location: s.loc.clone() });
        }
    });
}

fn callees(d: &FuncDecl) -> (Vec<String>, bool) {
    let mut names = Vec::new();
    let mut spawns = false;
    walk_stmts(&d.body, &mut |s| match &s.kind {
        StmtKind::Call { callee, .. } => names.push(callee.clone()),
        StmtKind::Go { callee, .. } => {
            spawns = true;
            names.push(callee.clone());
        }
        _ => {}
    });
    (names, spawns)
}

fn recursive_spawns(p: &Program) -> Vec<Violation> {
    let index: HashMap<&str, usize> =
        p.decls.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect();
    let n = p.decls.len();
    let mut edges = vec![Vec::new(); n];
    let mut spawns = vec![false; n];
    for (i, d) in p.decls.iter().enumerate() {
        let (names, s) = callees(d);
        spawns[i] = s;
        edges[i] = names.iter().filter_map(|c| index.get(c.as_str()).copied()).collect();
    }
    // reach[i]: functions reachable from i in one or more steps.
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut stack = edges[start].clone();
            while let Some(v) = stack.pop() {
                if !seen[v] {
                    seen[v] = true;
                    stack.extend(edges[v].iter().copied());
                }
            }
            seen
        })
        .collect();
    let mut out = Vec::new();
    for (i, from) in reach.iter().enumerate() {
        if !from[i] {
            continue;
        }
        let cycle_spawns = (0..n).any(|j| from[j] && reach[j][i] && spawns[j]);
        if cycle_spawns {
            let d = &p.decls[i];
            out.push(Violation::RecursiveSpawn { function: d.name.clone(), location: d.loc.clone() });
        }
    }
    out
}
