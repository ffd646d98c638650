//! Communication-related parameters: loop-bound extraction, the Δ map from
//! source expressions to model symbols, and the `spawns` predicate.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{walk_stmts, CmpOp, Condition, Expr, LoopControl, Mutator, Program, Stmt, StmtKind};
use crate::syntax::Location;

/// A loop bound or channel capacity in the model: either a known integer
/// or a named parameter the user must instantiate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Lit(i64),
    Sym(String),
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Lit(n) => write!(f, "{n}"),
            Bound::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Capacity,
    LoopBound,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Capacity => "capacity",
            Role::LoopBound => "loop-bound",
        })
    }
}

/// A free model parameter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSymbol {
    pub name: String,
    /// Where the parameter was first needed.
    pub origin: Location,
    pub role: Role,
    /// Source text of the expression it stands for; `None` for the fresh
    /// symbols of an unrecognized loop.
    pub expr: Option<String>,
}

/// Issues symbol names for one partition. Names are the sanitized
/// expression text plus a per-name counter: `len(files)` becomes
/// `len_files_0`.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    by_expr: BTreeMap<Expr, String>,
    counters: BTreeMap<String, usize>,
    symbols: Vec<ParamSymbol>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn symbols(&self) -> &[ParamSymbol] {
        &self.symbols
    }

    pub fn get(&self, name: &str) -> Option<&ParamSymbol> {
        self.symbols.iter().find(|s| s.name == name)
    }

    fn issue(&mut self, base: &str, origin: &Location, role: Role, expr: Option<String>) -> String {
        let n = self.counters.entry(base.to_string()).or_insert(0);
        let name = format!("{base}_{n}");
        *n += 1;
        self.symbols.push(ParamSymbol { name: name.clone(), origin: origin.clone(), role, expr });
        name
    }

    /// The symbol for `e`, reusing the one issued for the same expression
    /// text earlier in the partition.
    fn symbol_for(&mut self, e: &Expr, origin: &Location, role: Role) -> String {
        if let Some(s) = self.by_expr.get(e) {
            return s.clone();
        }
        let name = self.issue(&sanitize(&e.text()), origin, role, Some(e.text()));
        self.by_expr.insert(e.clone(), name.clone());
        name
    }

    fn fresh(&mut self, origin: &Location) -> String {
        self.issue("fresh", origin, Role::LoopBound, None)
    }
}

/// `len(files)` → `len_files`.
pub fn sanitize(text: &str) -> String {
    let mut out = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let trimmed = out.trim_matches('_');
    if trimmed.is_empty() {
        "param".to_string()
    } else if trimmed.starts_with(|c: char| c.is_ascii_digit()) {
        format!("p_{trimmed}")
    } else {
        trimmed.to_string()
    }
}

/// Δ: expressions seen so far mapped to their symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamEnv {
    bindings: BTreeMap<Expr, String>,
}

impl ParamEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn contains(&self, e: &Expr) -> bool {
        self.bindings.contains_key(e)
    }

    /// Δ(e), with Δ(n) = n for integer literals.
    pub fn get(&self, e: &Expr) -> Option<Bound> {
        match e {
            Expr::IntLit(n) => Some(Bound::Lit(*n)),
            _ => self.bindings.get(e).map(|s| Bound::Sym(s.clone())),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Expr, &str)> {
        self.bindings.iter().map(|(e, s)| (e, s.as_str()))
    }
}

/// Lower and upper bound of a loop control, or `None` (⊥) when it does not
/// follow one of the two counting patterns. `<=` and `>=` are accepted
/// with a literal bound, shifted by one.
pub fn bound_extract(b: &LoopControl) -> (Option<Expr>, Option<Expr>) {
    let (Some((v, e1)), Some(Condition::Compare { var, op, bound }), Some(post)) =
        (&b.init, &b.cond, &b.post)
    else {
        return (None, None);
    };
    if var != v {
        return (None, None);
    }
    let literal = |e: &Expr, delta: i64| match e {
        Expr::IntLit(n) => n.checked_add(delta).map(Expr::IntLit),
        _ => None,
    };
    match (op, post) {
        (CmpOp::Lt, Mutator::Incr(m)) if m == v => (Some(e1.clone()), Some(bound.clone())),
        (CmpOp::Le, Mutator::Incr(m)) if m == v => match literal(bound, 1) {
            Some(upper) => (Some(e1.clone()), Some(upper)),
            None => (None, None),
        },
        (CmpOp::Gt, Mutator::Decr(m)) if m == v => (Some(bound.clone()), Some(e1.clone())),
        (CmpOp::Ge, Mutator::Decr(m)) if m == v => match literal(bound, -1) {
            Some(lower) => (Some(lower), Some(e1.clone())),
            None => (None, None),
        },
        _ => (None, None),
    }
}

/// Result of [`lookup`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lookup {
    pub env: ParamEnv,
    pub lower: Bound,
    pub upper: Bound,
    /// Whether the control matched a counting pattern.
    pub recognized: bool,
}

/// Bound lookup against Δ. Unrecognized controls yield two fresh one-shot
/// symbols that are not recorded in Δ; otherwise Δ is extended with a
/// symbol for every bound expression it does not contain yet.
pub fn lookup(
    env: &ParamEnv,
    b: &LoopControl,
    table: &mut SymbolTable,
    origin: &Location,
    role: Role,
) -> Lookup {
    let (Some(lo), Some(hi)) = bound_extract(b) else {
        let lower = Bound::Sym(table.fresh(origin));
        let upper = Bound::Sym(table.fresh(origin));
        return Lookup { env: env.clone(), lower, upper, recognized: false };
    };
    let mut next = env.clone();
    for e in [&lo, &hi] {
        if !matches!(e, Expr::IntLit(_)) && !next.contains(e) {
            let sym = table.symbol_for(e, origin, role);
            next.bindings.insert(e.clone(), sym);
        }
    }
    let lower = next.get(&lo).expect("bound just inserted");
    let upper = next.get(&hi).expect("bound just inserted");
    Lookup { env: next, lower, upper, recognized: true }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("call to undeclared function '{0}'")]
pub struct UnknownFunction(pub String);

/// Calls to these are never resolved against the program.
pub fn is_builtin(name: &str) -> bool {
    name.contains('.')
        || matches!(
            name,
            "print" | "println" | "panic" | "len" | "cap" | "append" | "copy" | "delete" | "new"
                | "make" | "recover" | "min" | "max" | "clear"
        )
}

/// Whether `body` contains a `go` statement, directly or in any function
/// reachable through ordinary calls. Undeclared callees count as
/// non-spawning when `lenient` is set and are an error otherwise.
pub fn spawns(body: &[Stmt], p: &Program, lenient: bool) -> Result<bool, UnknownFunction> {
    let mut visited = HashSet::new();
    spawns_in(body, p, lenient, &mut visited)
}

fn spawns_in<'a>(
    body: &'a [Stmt],
    p: &'a Program,
    lenient: bool,
    visited: &mut HashSet<&'a str>,
) -> Result<bool, UnknownFunction> {
    let mut found = false;
    let mut calls: Vec<&'a str> = Vec::new();
    walk_stmts(body, &mut |s| match &s.kind {
        StmtKind::Go { .. } => found = true,
        StmtKind::Call { callee, .. } => calls.push(callee),
        _ => {}
    });
    if found {
        return Ok(true);
    }
    for c in calls {
        if !visited.insert(c) {
            continue;
        }
        match p.func(c) {
            Some(f) => {
                if spawns_in(&f.body, p, lenient, visited)? {
                    return Ok(true);
                }
            }
            None if lenient || is_builtin(c) => {}
            None => return Err(UnknownFunction(c.to_string())),
        }
    }
    Ok(false)
}
