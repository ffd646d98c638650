//! Abstract syntax of MiniGo.
//!
//! Computation is modelled only as far as it matters for communication:
//! expressions keep integer and boolean literals and plain variables, and
//! everything else collapses into an [`Expr::Opaque`] node keyed by its
//! normalized source text.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// A position in an input file. Lines and columns are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub file: Arc<str>,
    pub line: u32,
    pub column: u32,
}

impl Location {
    pub fn new(file: Arc<str>, line: u32, column: u32) -> Self {
        Location { file, line, column }
    }

    /// Placeholder used for synthesized nodes and by location-insensitive
    /// comparisons.
    pub fn unknown() -> Self {
        Location { file: Arc::from(""), line: 0, column: 0 }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.file.is_empty() {
            write!(f, "{}:{}", self.line, self.column)
        } else {
            write!(f, "{}:{}:{}", self.file, self.line, self.column)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub decls: Vec<FuncDecl>,
}

impl Program {
    pub fn func(&self, name: &str) -> Option<&FuncDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    /// Copy of the program with every location replaced by
    /// [`Location::unknown`], for structural comparison.
    pub fn without_locations(&self) -> Program {
        Program { decls: self.decls.iter().map(FuncDecl::without_locations).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub loc: Location,
}

impl FuncDecl {
    pub fn chan_params(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| p.is_chan)
    }

    pub fn has_chan_params(&self) -> bool {
        self.params.iter().any(|p| p.is_chan)
    }

    fn without_locations(&self) -> FuncDecl {
        FuncDecl {
            name: self.name.clone(),
            params: self.params.clone(),
            body: strip_block(&self.body),
            loc: Location::unknown(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub is_chan: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Location,
}

impl Stmt {
    pub fn new(kind: StmtKind, loc: Location) -> Self {
        Stmt { kind, loc }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    /// `ch := make(chan T, capacity)`; a missing capacity parses as `0`.
    MakeChan { name: String, capacity: Expr },
    Send { chan: String, value: Expr },
    /// `v := <-ch`, `v = <-ch` or a bare `<-ch`.
    Recv { target: Option<String>, chan: String },
    Close { chan: String },
    Select { cases: Vec<SelectCase>, default: Option<Vec<Stmt>> },
    Call { callee: String, args: Vec<Arg> },
    Go { callee: String, args: Vec<Arg> },
    Block(Vec<Stmt>),
    If { cond: Expr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt> },
    For { control: LoopControl, body: Vec<Stmt> },
    /// `for k, v := range over` where `over` is not a channel.
    ForRange { key: Option<String>, value: Option<String>, over: Expr, body: Vec<Stmt> },
    /// `for v := range ch`: receive until the channel is closed and drained.
    RangeChan { target: Option<String>, chan: String, body: Vec<Stmt> },
    /// Only the branch bodies matter; case expressions are abstracted away.
    Switch { branches: Vec<Vec<Stmt>>, has_default: bool },
    Break,
    Return,
    /// Value-level assignment or declaration, abstracted by the model.
    Assign { targets: Vec<String>, value: Option<Expr>, define: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectCase {
    pub comm: Comm,
    pub body: Vec<Stmt>,
    pub loc: Location,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comm {
    Send { chan: String, value: Expr },
    Recv { target: Option<String>, chan: String },
}

impl Comm {
    pub fn chan(&self) -> &str {
        match self {
            Comm::Send { chan, .. } | Comm::Recv { chan, .. } => chan,
        }
    }
}

/// Call argument: either a channel variable or a value expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Arg {
    Chan(String),
    Value(Expr),
}

impl Arg {
    pub fn as_chan(&self) -> Option<&str> {
        match self {
            Arg::Chan(c) => Some(c),
            Arg::Value(_) => None,
        }
    }
}

/// The `v := e1; cond; post` triple of a for-loop. Every part is optional
/// because Go allows each of them to be left out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopControl {
    pub init: Option<(String, Expr)>,
    pub cond: Option<Condition>,
    pub post: Option<Mutator>,
}

impl LoopControl {
    /// `for {}`: no init, condition or post statement.
    pub fn is_unconditional(&self) -> bool {
        self.init.is_none() && self.cond.is_none() && self.post.is_none()
    }

    /// The synthetic `i := 0; i < bound; i++` control used for channel
    /// capacities and range loops.
    pub fn counting_up_to(var: &str, bound: Expr) -> Self {
        LoopControl {
            init: Some((var.to_string(), Expr::IntLit(0))),
            cond: Some(Condition::Compare { var: var.to_string(), op: CmpOp::Lt, bound }),
            post: Some(Mutator::Incr(var.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Condition {
    /// `var op bound`
    Compare { var: String, op: CmpOp, bound: Expr },
    Other(Expr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Ne => "!=",
            CmpOp::Eq => "==",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mutator {
    Incr(String),
    Decr(String),
    /// Normalized text of any other post statement.
    Other(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Expr {
    IntLit(i64),
    BoolLit(bool),
    Var(String),
    Opaque(Opaque),
}

/// An expression the model does not interpret. Equality and hashing use
/// only the normalized text, so `len( files )` and `len(files)` coincide.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Opaque {
    pub text: String,
    /// Identifiers the expression reads, used for assumption checks.
    pub idents: Vec<String>,
}

impl Opaque {
    pub fn new(text: impl Into<String>) -> Self {
        Opaque { text: text.into(), idents: Vec::new() }
    }
}

impl PartialEq for Opaque {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for Opaque {}

impl Hash for Opaque {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.text.hash(state)
    }
}

impl PartialOrd for Opaque {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Opaque {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.text.cmp(&other.text)
    }
}

impl Expr {
    pub fn opaque(text: impl Into<String>) -> Self {
        Expr::Opaque(Opaque::new(text))
    }

    /// Normalized source text of the expression.
    pub fn text(&self) -> String {
        match self {
            Expr::IntLit(n) => n.to_string(),
            Expr::BoolLit(b) => b.to_string(),
            Expr::Var(v) => v.clone(),
            Expr::Opaque(o) => o.text.clone(),
        }
    }

    /// Variables the expression reads.
    pub fn idents(&self) -> Vec<&str> {
        match self {
            Expr::IntLit(_) | Expr::BoolLit(_) => Vec::new(),
            Expr::Var(v) => vec![v.as_str()],
            Expr::Opaque(o) => o.idents.iter().map(String::as_str).collect(),
        }
    }
}

// Derived impls would compare the Opaque ident list; route everything
// through the variant payloads instead.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Expr::IntLit(a), Expr::IntLit(b)) => a == b,
            (Expr::BoolLit(a), Expr::BoolLit(b)) => a == b,
            (Expr::Var(a), Expr::Var(b)) => a == b,
            (Expr::Opaque(a), Expr::Opaque(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Expr::IntLit(n) => n.hash(state),
            Expr::BoolLit(b) => b.hash(state),
            Expr::Var(v) => v.hash(state),
            Expr::Opaque(o) => o.hash(state),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        fn rank(e: &Expr) -> u8 {
            match e {
                Expr::IntLit(_) => 0,
                Expr::BoolLit(_) => 1,
                Expr::Var(_) => 2,
                Expr::Opaque(_) => 3,
            }
        }
        match (self, other) {
            (Expr::IntLit(a), Expr::IntLit(b)) => a.cmp(b),
            (Expr::BoolLit(a), Expr::BoolLit(b)) => a.cmp(b),
            (Expr::Var(a), Expr::Var(b)) => a.cmp(b),
            (Expr::Opaque(a), Expr::Opaque(b)) => a.cmp(b),
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

fn strip_block(stmts: &[Stmt]) -> Vec<Stmt> {
    stmts.iter().map(strip_stmt).collect()
}

fn strip_stmt(s: &Stmt) -> Stmt {
    let kind = match &s.kind {
        StmtKind::Select { cases, default } => StmtKind::Select {
            cases: cases
                .iter()
                .map(|c| SelectCase {
                    comm: c.comm.clone(),
                    body: strip_block(&c.body),
                    loc: Location::unknown(),
                })
                .collect(),
            default: default.as_ref().map(|d| strip_block(d)),
        },
        StmtKind::Block(b) => StmtKind::Block(strip_block(b)),
        StmtKind::If { cond, then_branch, else_branch } => StmtKind::If {
            cond: cond.clone(),
            then_branch: strip_block(then_branch),
            else_branch: strip_block(else_branch),
        },
        StmtKind::For { control, body } => {
            StmtKind::For { control: control.clone(), body: strip_block(body) }
        }
        StmtKind::ForRange { key, value, over, body } => StmtKind::ForRange {
            key: key.clone(),
            value: value.clone(),
            over: over.clone(),
            body: strip_block(body),
        },
        StmtKind::RangeChan { target, chan, body } => StmtKind::RangeChan {
            target: target.clone(),
            chan: chan.clone(),
            body: strip_block(body),
        },
        StmtKind::Switch { branches, has_default } => StmtKind::Switch {
            branches: branches.iter().map(|b| strip_block(b)).collect(),
            has_default: *has_default,
        },
        other => other.clone(),
    };
    Stmt { kind, loc: Location::unknown() }
}

/// Pre-order walk over a statement list, descending into every nested body.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        for child in s.children() {
            walk_stmts(child, f);
        }
    }
}

impl Stmt {
    /// Nested statement lists, in source order.
    pub fn children(&self) -> Vec<&[Stmt]> {
        match &self.kind {
            StmtKind::Select { cases, default } => {
                let mut v: Vec<&[Stmt]> = cases.iter().map(|c| c.body.as_slice()).collect();
                if let Some(d) = default {
                    v.push(d);
                }
                v
            }
            StmtKind::Block(b) => vec![b],
            StmtKind::If { then_branch, else_branch, .. } => vec![then_branch, else_branch],
            StmtKind::For { body, .. }
            | StmtKind::ForRange { body, .. }
            | StmtKind::RangeChan { body, .. } => vec![body],
            StmtKind::Switch { branches, .. } => branches.iter().map(|b| b.as_slice()).collect(),
            _ => Vec::new(),
        }
    }
}
