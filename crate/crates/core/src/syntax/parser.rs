//! Recursive-descent parser for MiniGo.
//!
//! The accepted surface is a subset of Go: top-level functions and
//! constants (`package` and `import` clauses are skipped), channel
//! operations, `select`, `go`, conditionals, the three `for` forms,
//! `switch` and `break`/`return`. Integer constants are substituted by
//! their values; anonymous functions in `go`/call position are lifted to
//! top-level declarations, with captured channels turned into parameters.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    parse_program_named("", source)
}

pub fn parse_program_named(file: &str, source: &str) -> Result<Program, ParseError> {
    let toks = tokenize(source)?;
    let mut p = Parser::new(Arc::from(file), toks);
    p.collect_top_level()?;
    p.pos = 0;
    p.file_decls()
}

// ---------------------------------------------------------------------------
// Raw expressions

#[derive(Clone, Debug)]
enum Raw {
    Ident(String),
    Int(String),
    Lit(String),
    Paren(Box<Raw>),
    Unary(&'static str, Box<Raw>),
    Binary(&'static str, Box<Raw>, Box<Raw>),
    Selector(Box<Raw>, String),
    Index(Box<Raw>, Box<Raw>),
    Slice(Box<Raw>, Option<Box<Raw>>, Option<Box<Raw>>),
    Call(Box<Raw>, Vec<Raw>, bool),
    Composite(String, Vec<Raw>),
    KeyValue(Box<Raw>, Box<Raw>),
    Type(TypeInfo),
    FuncLit(Box<FuncLit>),
}

#[derive(Clone, Debug)]
struct TypeInfo {
    text: String,
    is_chan: bool,
}

#[derive(Clone, Debug)]
struct FuncLit {
    name: String,
    params: Vec<Param>,
    body: Vec<Stmt>,
    captures: Vec<String>,
    loc: Location,
}

/// Stands in for a receive that was hoisted out of a value expression, so
/// the expression text no longer performs the receive when re-parsed.
pub const RECV_PREFIX: &str = "_recv_";

fn parse_int(text: &str) -> Option<i64> {
    let t = text.replace('_', "");
    if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        i64::from_str_radix(h, 16).ok()
    } else if let Some(b) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
        i64::from_str_radix(b, 2).ok()
    } else if let Some(o) = t.strip_prefix("0o").or_else(|| t.strip_prefix("0O")) {
        i64::from_str_radix(o, 8).ok()
    } else if t.len() > 1 && t.starts_with('0') {
        i64::from_str_radix(&t[1..], 8).ok()
    } else {
        t.parse().ok()
    }
}

impl Raw {
    fn text(&self) -> String {
        match self {
            Raw::Ident(s) | Raw::Int(s) | Raw::Lit(s) => s.clone(),
            Raw::Paren(e) => format!("({})", e.text()),
            Raw::Unary(op, e) => format!("{op}{}", e.text()),
            Raw::Binary(op, a, b) => format!("{} {op} {}", a.text(), b.text()),
            Raw::Selector(e, f) => format!("{}.{f}", e.text()),
            Raw::Index(e, i) => format!("{}[{}]", e.text(), i.text()),
            Raw::Slice(e, lo, hi) => format!(
                "{}[{}:{}]",
                e.text(),
                lo.as_ref().map(|x| x.text()).unwrap_or_default(),
                hi.as_ref().map(|x| x.text()).unwrap_or_default()
            ),
            Raw::Call(f, args, dots) => format!(
                "{}({}{})",
                f.text(),
                args.iter().map(Raw::text).collect::<Vec<_>>().join(", "),
                if *dots { "..." } else { "" }
            ),
            Raw::Composite(ty, elems) => {
                format!("{ty}{{{}}}", elems.iter().map(Raw::text).collect::<Vec<_>>().join(", "))
            }
            Raw::KeyValue(k, v) => format!("{}: {}", k.text(), v.text()),
            Raw::Type(t) => t.text.clone(),
            Raw::FuncLit(f) => format!("func_literal_{}", f.name),
        }
    }

    fn fold(&self, consts: &HashMap<String, i64>) -> Option<i64> {
        match self {
            Raw::Int(t) => parse_int(t),
            Raw::Ident(name) => consts.get(name).copied(),
            Raw::Paren(e) => e.fold(consts),
            Raw::Unary("-", e) => e.fold(consts)?.checked_neg(),
            Raw::Unary("+", e) => e.fold(consts),
            Raw::Binary(op, a, b) => {
                let (a, b) = (a.fold(consts)?, b.fold(consts)?);
                match *op {
                    "+" => a.checked_add(b),
                    "-" => a.checked_sub(b),
                    "*" => a.checked_mul(b),
                    "/" => a.checked_div(b),
                    "%" => a.checked_rem(b),
                    "<<" => u32::try_from(b).ok().and_then(|s| a.checked_shl(s)),
                    ">>" => u32::try_from(b).ok().and_then(|s| a.checked_shr(s)),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Replace constant identifiers by their values.
    fn substitute(&self, consts: &HashMap<String, i64>) -> Raw {
        let sub = |e: &Raw| Box::new(e.substitute(consts));
        match self {
            Raw::Ident(name) => match consts.get(name) {
                Some(v) => Raw::Int(v.to_string()),
                None => self.clone(),
            },
            Raw::Paren(e) => Raw::Paren(sub(e)),
            Raw::Unary("<-", e) if e.as_ident().is_some() => {
                Raw::Ident(format!("{RECV_PREFIX}{}", e.as_ident().unwrap()))
            }
            Raw::Unary(op, e) => Raw::Unary(op, sub(e)),
            Raw::Binary(op, a, b) => Raw::Binary(op, sub(a), sub(b)),
            Raw::Selector(e, f) => Raw::Selector(sub(e), f.clone()),
            Raw::Index(e, i) => Raw::Index(sub(e), sub(i)),
            Raw::Slice(e, lo, hi) => {
                Raw::Slice(sub(e), lo.as_ref().map(|x| sub(x)), hi.as_ref().map(|x| sub(x)))
            }
            Raw::Call(f, args, d) => {
                Raw::Call(sub(f), args.iter().map(|a| a.substitute(consts)).collect(), *d)
            }
            Raw::Composite(t, elems) => {
                Raw::Composite(t.clone(), elems.iter().map(|a| a.substitute(consts)).collect())
            }
            Raw::KeyValue(k, v) => Raw::KeyValue(sub(k), sub(v)),
            _ => self.clone(),
        }
    }

    fn collect_idents(&self, out: &mut Vec<String>) {
        match self {
            Raw::Ident(n) => {
                if !out.contains(n) {
                    out.push(n.clone())
                }
            }
            Raw::Paren(e) | Raw::Unary(_, e) | Raw::Selector(e, _) => e.collect_idents(out),
            Raw::Binary(_, a, b) | Raw::Index(a, b) | Raw::KeyValue(a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            Raw::Slice(e, lo, hi) => {
                e.collect_idents(out);
                for x in [lo, hi].into_iter().flatten() {
                    x.collect_idents(out);
                }
            }
            Raw::Call(f, args, _) => {
                f.collect_idents(out);
                args.iter().for_each(|a| a.collect_idents(out));
            }
            Raw::Composite(_, elems) => elems.iter().for_each(|a| a.collect_idents(out)),
            Raw::Int(_) | Raw::Lit(_) | Raw::Type(_) | Raw::FuncLit(_) => {}
        }
    }

    fn as_ident(&self) -> Option<&str> {
        match self {
            Raw::Ident(n) => Some(n),
            Raw::Paren(e) => e.as_ident(),
            _ => None,
        }
    }

    /// `<-ch` where the operand is a plain identifier.
    fn as_recv(&self) -> Option<&str> {
        match self {
            Raw::Unary("<-", e) => e.as_ident(),
            Raw::Paren(e) => e.as_recv(),
            _ => None,
        }
    }
}

/// Simple statements, before lowering.
#[derive(Debug)]
enum Simple {
    Expr(Raw),
    Define(Vec<Raw>, Vec<Raw>),
    Assign(&'static str, Vec<Raw>, Vec<Raw>),
    IncDec(Raw, &'static str),
    Send(Raw, Raw),
}

struct Frame {
    chans: HashSet<String>,
    captures: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Breakable {
    Loop,
    Choice,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: Arc<str>,
    consts: HashMap<String, i64>,
    func_names: HashSet<String>,
    frames: Vec<Frame>,
    top_func: String,
    anon_counter: usize,
    lifted: Vec<(usize, FuncDecl)>,
    breakables: Vec<Breakable>,
    no_composite: bool,
}

type PResult<T> = Result<T, ParseError>;

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Int(s) | Tok::Lit(s) => format!("'{s}'"),
        Tok::Keyword(k) => format!("'{k}'"),
        Tok::Punct(p) => format!("'{p}'"),
        Tok::Semi => "newline or ';'".to_string(),
        Tok::Eof => "end of file".to_string(),
    }
}

impl Parser {
    fn new(file: Arc<str>, toks: Vec<Token>) -> Self {
        Parser {
            toks,
            pos: 0,
            file,
            consts: HashMap::new(),
            func_names: HashSet::new(),
            frames: Vec::new(),
            top_func: String::new(),
            anon_counter: 0,
            lifted: Vec::new(),
            breakables: Vec::new(),
            no_composite: false,
        }
    }

    // -- token helpers ------------------------------------------------------

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn loc(&self) -> Location {
        let t = &self.toks[self.pos];
        Location::new(self.file.clone(), t.line, t.column)
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, msg: impl Into<String>) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError { line: t.line, column: t.column, message: msg.into() }
    }

    fn error_at(&self, loc: &Location, msg: impl Into<String>) -> ParseError {
        ParseError { line: loc.line, column: loc.column, message: msg.into() }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.error_here(format!("expected {expected}, found {}", describe(self.peek())))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Keyword(q) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{p}'")))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn skip_semis(&mut self) {
        while *self.peek() == Tok::Semi {
            self.advance();
        }
    }

    fn end_of_stmt(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Semi => {
                self.advance();
                Ok(())
            }
            Tok::Punct(")") | Tok::Punct("}") | Tok::Eof => Ok(()),
            _ => Err(self.unexpected("end of statement")),
        }
    }

    /// Skip a balanced bracket group starting at the current opening token.
    fn skip_balanced(&mut self) -> PResult<()> {
        let mut depth = 0i32;
        loop {
            match self.advance() {
                Tok::Punct("(" | "[" | "{") => depth += 1,
                Tok::Punct(")" | "]" | "}") => {
                    depth -= 1;
                    if depth <= 0 {
                        return Ok(());
                    }
                }
                Tok::Eof => return Err(self.error_here("unbalanced brackets")),
                _ => {}
            }
        }
    }

    // -- channel scopes -----------------------------------------------------

    fn declare_chan(&mut self, name: &str) {
        if let Some(f) = self.frames.last_mut() {
            f.chans.insert(name.to_string());
        }
    }

    fn is_chan(&mut self, name: &str) -> bool {
        let Some(depth) = self.frames.iter().rposition(|f| f.chans.contains(name)) else {
            return false;
        };
        for f in &mut self.frames[depth + 1..] {
            if !f.captures.iter().any(|c| c == name) {
                f.captures.push(name.to_string());
            }
        }
        true
    }

    // -- top level ----------------------------------------------------------

    /// First pass: function names and top-level constants, so bodies can
    /// refer to declarations that appear later in the file.
    fn collect_top_level(&mut self) -> PResult<()> {
        // Malformed input is diagnosed by the second pass, which knows
        // what it expected.
        let _ = self.scan_top_level();
        Ok(())
    }

    fn scan_top_level(&mut self) -> PResult<()> {
        loop {
            self.skip_semis();
            match self.peek().clone() {
                Tok::Eof => return Ok(()),
                Tok::Keyword("const") => {
                    self.advance();
                    self.const_decl()?;
                }
                Tok::Keyword("func") => {
                    self.advance();
                    if let Tok::Ident(name) = self.peek().clone() {
                        self.func_names.insert(name);
                    }
                    while !self.is_punct("{") && *self.peek() != Tok::Eof {
                        if self.is_punct("(") {
                            self.skip_balanced()?;
                        } else {
                            self.advance();
                        }
                    }
                    if self.is_punct("{") {
                        self.skip_balanced()?;
                    }
                }
                _ => {
                    // Everything else is validated in the second pass.
                    while !matches!(self.peek(), Tok::Semi | Tok::Eof) {
                        if matches!(self.peek(), Tok::Punct("(" | "[" | "{")) {
                            self.skip_balanced()?;
                        } else {
                            self.advance();
                        }
                    }
                }
            }
        }
    }

    fn file_decls(&mut self) -> PResult<Program> {
        let mut decls = Vec::new();
        self.skip_semis();
        if self.is_kw("package") {
            self.advance();
            self.expect_ident()?;
            self.end_of_stmt()?;
        }
        loop {
            self.skip_semis();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Keyword("import") => {
                    self.advance();
                    if self.is_punct("(") {
                        self.skip_balanced()?;
                    } else {
                        if let Tok::Ident(_) = self.peek() {
                            self.advance();
                        } else if self.is_punct(".") {
                            self.advance();
                        }
                        match self.advance() {
                            Tok::Lit(s) if s.starts_with('"') || s.starts_with('`') => {}
                            _ => return Err(self.error_here("expected import path")),
                        }
                    }
                    self.end_of_stmt()?;
                }
                Tok::Keyword("const") => {
                    self.advance();
                    self.const_decl()?;
                    self.end_of_stmt()?;
                }
                Tok::Keyword("var") => {
                    let loc = self.loc();
                    self.advance();
                    let stmts = self.var_decl(loc.clone())?;
                    if stmts.iter().any(|s| matches!(s.kind, StmtKind::MakeChan { .. })) {
                        return Err(self.error_at(&loc, "package-level channels are not supported"));
                    }
                    self.end_of_stmt()?;
                }
                Tok::Keyword("func") => {
                    let decl = self.func_decl()?;
                    decls.push(decl);
                    let mut lifted = std::mem::take(&mut self.lifted);
                    lifted.sort_by_key(|(i, _)| *i);
                    decls.extend(lifted.into_iter().map(|(_, d)| d));
                    self.end_of_stmt()?;
                }
                Tok::Keyword("type") => {
                    return Err(self.error_here("type declarations are not supported"));
                }
                _ => return Err(self.unexpected("declaration")),
            }
        }
        Ok(Program { decls })
    }

    fn const_decl(&mut self) -> PResult<()> {
        if self.eat_punct("(") {
            loop {
                self.skip_semis();
                if self.eat_punct(")") {
                    break;
                }
                self.const_spec()?;
                self.end_of_stmt()?;
            }
        } else {
            self.const_spec()?;
        }
        Ok(())
    }

    fn const_spec(&mut self) -> PResult<()> {
        let mut names = vec![self.expect_ident()?];
        while self.eat_punct(",") {
            names.push(self.expect_ident()?);
        }
        if !self.is_punct("=") && !matches!(self.peek(), Tok::Semi | Tok::Punct(")")) {
            self.parse_type()?;
        }
        if self.eat_punct("=") {
            let values = self.expr_list()?;
            for (name, value) in names.iter().zip(values.iter()) {
                if let Some(v) = value.fold(&self.consts) {
                    self.consts.insert(name.clone(), v);
                }
            }
        }
        Ok(())
    }

    fn func_decl(&mut self) -> PResult<FuncDecl> {
        let loc = self.loc();
        self.advance(); // func
        if self.is_punct("(") {
            return Err(self.error_here("methods are not supported"));
        }
        let name = self.expect_ident()?;
        if self.is_punct("[") {
            return Err(self.error_here("generic functions are not supported"));
        }
        self.top_func = name.clone();
        self.anon_counter = 0;
        let params = self.param_list()?;
        self.result_type()?;
        let mut frame = Frame { chans: HashSet::new(), captures: Vec::new() };
        frame.chans.extend(params.iter().filter(|p| p.is_chan).map(|p| p.name.clone()));
        self.frames.push(frame);
        let body = self.block();
        self.frames.pop();
        Ok(FuncDecl { name, params, body: body?, loc })
    }

    fn param_list(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        let mut pending: Vec<String> = Vec::new();
        let mut unnamed = 0usize;
        loop {
            if self.eat_punct(")") {
                break;
            }
            match self.peek().clone() {
                Tok::Ident(name)
                    if matches!(self.peek_at(1), Tok::Punct("," | ")")) =>
                {
                    self.advance();
                    pending.push(name);
                }
                Tok::Ident(name) if !matches!(self.peek_at(1), Tok::Punct(".")) => {
                    self.advance();
                    let ty = self.parse_type()?;
                    pending.push(name);
                    for n in pending.drain(..) {
                        params.push(Param { name: n, is_chan: ty.is_chan });
                    }
                }
                Tok::Ident(_) | Tok::Keyword(_) | Tok::Punct("[" | "*" | "<-" | "..." | "(") => {
                    let ty = self.parse_type()?;
                    params.push(Param { name: format!("_arg{unnamed}"), is_chan: ty.is_chan });
                    unnamed += 1;
                }
                _ => return Err(self.unexpected("parameter or ')'")),
            }
            if !self.is_punct(")") {
                self.expect_punct(",")?;
            }
        }
        // Trailing bare names were types of unnamed parameters.
        for _ in pending {
            params.push(Param { name: format!("_arg{unnamed}"), is_chan: false });
            unnamed += 1;
        }
        Ok(params)
    }

    fn result_type(&mut self) -> PResult<()> {
        if self.is_punct("{") || matches!(self.peek(), Tok::Semi | Tok::Punct(")" | "," | "]")) {
            return Ok(());
        }
        if self.is_punct("(") {
            self.param_list()?;
        } else {
            self.parse_type()?;
        }
        Ok(())
    }

    fn parse_type(&mut self) -> PResult<TypeInfo> {
        match self.peek().clone() {
            Tok::Keyword("chan") => {
                self.advance();
                let dir = if self.eat_punct("<-") { "<-" } else { "" };
                if matches!(self.peek(), Tok::Punct("," | ")")) {
                    return Ok(TypeInfo { text: format!("chan{dir}"), is_chan: true });
                }
                let elem = self.parse_type()?;
                Ok(TypeInfo { text: format!("chan{dir} {}", elem.text), is_chan: true })
            }
            Tok::Punct("<-") => {
                self.advance();
                if !self.is_kw("chan") {
                    return Err(self.unexpected("'chan'"));
                }
                self.advance();
                let elem = self.parse_type()?;
                Ok(TypeInfo { text: format!("<-chan {}", elem.text), is_chan: true })
            }
            Tok::Punct("[") => {
                self.advance();
                let len = if self.eat_punct("]") {
                    String::new()
                } else if self.eat_punct("...") {
                    self.expect_punct("]")?;
                    "...".to_string()
                } else {
                    let e = self.expr()?;
                    self.expect_punct("]")?;
                    e.substitute(&self.consts).text()
                };
                let elem = self.parse_type()?;
                Ok(TypeInfo { text: format!("[{len}]{}", elem.text), is_chan: false })
            }
            Tok::Punct("*") => {
                self.advance();
                let elem = self.parse_type()?;
                Ok(TypeInfo { text: format!("*{}", elem.text), is_chan: false })
            }
            Tok::Punct("...") => {
                self.advance();
                let elem = self.parse_type()?;
                Ok(TypeInfo { text: format!("...{}", elem.text), is_chan: false })
            }
            Tok::Punct("(") => {
                self.advance();
                let t = self.parse_type()?;
                self.expect_punct(")")?;
                Ok(t)
            }
            Tok::Keyword("map") => {
                self.advance();
                self.expect_punct("[")?;
                let k = self.parse_type()?;
                self.expect_punct("]")?;
                let v = self.parse_type()?;
                Ok(TypeInfo { text: format!("map[{}]{}", k.text, v.text), is_chan: false })
            }
            Tok::Keyword("func") => {
                self.advance();
                self.param_list()?;
                if !matches!(self.peek(), Tok::Punct("{")) {
                    self.result_type()?;
                }
                Ok(TypeInfo { text: "func()".into(), is_chan: false })
            }
            Tok::Keyword(kw @ ("struct" | "interface")) => {
                self.advance();
                if !self.is_punct("{") {
                    return Err(self.unexpected("'{'"));
                }
                self.skip_balanced()?;
                Ok(TypeInfo { text: format!("{kw}{{}}"), is_chan: false })
            }
            Tok::Ident(name) => {
                self.advance();
                let mut text = name;
                if self.is_punct(".") {
                    self.advance();
                    text = format!("{text}.{}", self.expect_ident()?);
                }
                Ok(TypeInfo { text, is_chan: false })
            }
            _ => Err(self.unexpected("type")),
        }
    }

    // -- statements ---------------------------------------------------------

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let saved = std::mem::replace(&mut self.no_composite, false);
        let mut out = Vec::new();
        loop {
            self.skip_semis();
            if self.eat_punct("}") {
                break;
            }
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("'}'"));
            }
            out.extend(self.stmt()?);
            self.end_of_stmt()?;
        }
        self.no_composite = saved;
        Ok(out)
    }

    /// Statement list of a `case`/`default` clause.
    fn clause_body(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            self.skip_semis();
            if self.is_kw("case") || self.is_kw("default") || self.is_punct("}") {
                break;
            }
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("'}'"));
            }
            out.extend(self.stmt()?);
            self.end_of_stmt()?;
        }
        Ok(out)
    }

    fn stmt(&mut self) -> PResult<Vec<Stmt>> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Punct("{") => Ok(vec![Stmt::new(StmtKind::Block(self.block()?), loc)]),
            Tok::Keyword("go") => {
                self.advance();
                let call = self.unary_expr()?;
                let Raw::Call(callee, args, _) = call else {
                    return Err(self.error_at(&loc, "expression in go must be a function call"));
                };
                let mut pre = Vec::new();
                let (callee, args) = self.lower_call(*callee, args, &loc, &mut pre)?;
                pre.push(Stmt::new(StmtKind::Go { callee, args }, loc));
                Ok(pre)
            }
            Tok::Keyword("return") => {
                self.advance();
                let mut pre = Vec::new();
                if !matches!(self.peek(), Tok::Semi | Tok::Punct("}")) {
                    for e in self.expr_list()? {
                        self.lower_value(&e, &loc, &mut pre)?;
                    }
                }
                pre.push(Stmt::new(StmtKind::Return, loc));
                Ok(pre)
            }
            Tok::Keyword("break") => {
                self.advance();
                if let Tok::Ident(_) = self.peek() {
                    return Err(self.error_here("labelled break is not supported"));
                }
                if !self.breakables.contains(&Breakable::Loop) {
                    return Err(self.error_at(&loc, "break outside of a loop"));
                }
                Ok(vec![Stmt::new(StmtKind::Break, loc)])
            }
            Tok::Keyword("if") => self.if_stmt(),
            Tok::Keyword("for") => self.for_stmt(),
            Tok::Keyword("switch") => self.switch_stmt(),
            Tok::Keyword("select") => self.select_stmt(),
            Tok::Keyword("var") => {
                self.advance();
                self.var_decl(loc)
            }
            Tok::Keyword("const") => {
                self.advance();
                self.const_decl()?;
                Ok(Vec::new())
            }
            Tok::Keyword(kw @ ("defer" | "goto" | "continue" | "fallthrough" | "type")) => {
                Err(self.error_here(format!("'{kw}' statements are not supported")))
            }
            Tok::Ident(_) if matches!(self.peek_at(1), Tok::Punct(":")) => {
                Err(self.error_here("labelled statements are not supported"))
            }
            _ => {
                let simple = self.simple_stmt()?;
                self.lower_simple(simple, &loc)
            }
        }
    }

    fn var_decl(&mut self, loc: Location) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        if self.eat_punct("(") {
            loop {
                self.skip_semis();
                if self.eat_punct(")") {
                    break;
                }
                let spec_loc = self.loc();
                out.extend(self.var_spec(spec_loc)?);
                self.end_of_stmt()?;
            }
        } else {
            out.extend(self.var_spec(loc)?);
        }
        Ok(out)
    }

    fn var_spec(&mut self, loc: Location) -> PResult<Vec<Stmt>> {
        let mut names = vec![self.expect_ident()?];
        while self.eat_punct(",") {
            names.push(self.expect_ident()?);
        }
        let ty = if self.is_punct("=") { None } else { Some(self.parse_type()?) };
        if self.eat_punct("=") {
            let values = self.expr_list()?;
            let lhs = names.into_iter().map(Raw::Ident).collect();
            return self.lower_simple(Simple::Define(lhs, values), &loc);
        }
        if ty.as_ref().is_some_and(|t| t.is_chan) {
            return Err(self.error_at(&loc, "channel declared without make"));
        }
        Ok(vec![Stmt::new(StmtKind::Assign { targets: names, value: None, define: true }, loc)])
    }

    fn if_stmt(&mut self) -> PResult<Vec<Stmt>> {
        let loc = self.loc();
        self.advance(); // if
        let saved = std::mem::replace(&mut self.no_composite, true);
        let mut pre = Vec::new();
        let first = self.simple_stmt()?;
        let cond_raw = if *self.peek() == Tok::Semi {
            self.advance();
            pre.extend(self.lower_simple(first, &loc)?);
            self.expr()?
        } else {
            match first {
                Simple::Expr(e) => e,
                _ => return Err(self.error_at(&loc, "expected condition")),
            }
        };
        self.no_composite = saved;
        let cond = self.lower_value(&cond_raw, &loc, &mut pre)?;
        let then_branch = self.block()?;
        let else_branch = if self.is_kw("else") {
            self.advance();
            if self.is_kw("if") {
                self.if_stmt()?
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        pre.push(Stmt::new(StmtKind::If { cond, then_branch, else_branch }, loc));
        Ok(pre)
    }

    fn header_has_range(&self) -> bool {
        let mut depth = 0i32;
        for t in &self.toks[self.pos..] {
            match &t.tok {
                Tok::Punct("(" | "[") => depth += 1,
                Tok::Punct(")" | "]") => depth -= 1,
                Tok::Punct("{") if depth == 0 => return false,
                Tok::Keyword("range") if depth == 0 => return true,
                Tok::Eof => return false,
                _ => {}
            }
        }
        false
    }

    fn loop_body(&mut self) -> PResult<Vec<Stmt>> {
        self.breakables.push(Breakable::Loop);
        let body = self.block();
        self.breakables.pop();
        body
    }

    fn for_stmt(&mut self) -> PResult<Vec<Stmt>> {
        let loc = self.loc();
        self.advance(); // for
        if self.is_punct("{") {
            let body = self.loop_body()?;
            let control = LoopControl { init: None, cond: None, post: None };
            return Ok(vec![Stmt::new(StmtKind::For { control, body }, loc)]);
        }
        let saved = std::mem::replace(&mut self.no_composite, true);
        if self.header_has_range() {
            let mut vars: Vec<Option<String>> = Vec::new();
            if !self.is_kw("range") {
                loop {
                    let name = self.expect_ident()?;
                    vars.push(if name == "_" { None } else { Some(name) });
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                if !self.eat_punct(":=") && !self.eat_punct("=") {
                    return Err(self.unexpected("':='"));
                }
            }
            if !self.is_kw("range") {
                return Err(self.unexpected("'range'"));
            }
            self.advance();
            let over = self.expr()?;
            self.no_composite = saved;
            let body = self.loop_body()?;
            let mut pre = Vec::new();
            let kind = match over.as_ident() {
                Some(ch) if self.is_chan(ch) => StmtKind::RangeChan {
                    target: vars.first().cloned().flatten(),
                    chan: ch.to_string(),
                    body,
                },
                _ => {
                    let over = self.lower_value(&over, &loc, &mut pre)?;
                    StmtKind::ForRange {
                        key: vars.first().cloned().flatten(),
                        value: vars.get(1).cloned().flatten(),
                        over,
                        body,
                    }
                }
            };
            pre.push(Stmt::new(kind, loc));
            return Ok(pre);
        }

        let mut pre = Vec::new();
        let mut control = LoopControl { init: None, cond: None, post: None };
        let first = if *self.peek() == Tok::Semi { None } else { Some(self.simple_stmt()?) };
        if self.is_punct("{") {
            // `for cond {}`
            match first {
                Some(Simple::Expr(e)) => control.cond = Some(self.lower_condition(&e, &loc)?),
                _ => return Err(self.error_at(&loc, "expected loop condition")),
            }
        } else {
            if *self.peek() != Tok::Semi {
                return Err(self.unexpected("';' or '{'"));
            }
            self.advance();
            match first {
                None => {}
                Some(Simple::Define(lhs, rhs)) if lhs.len() == 1 && rhs.len() == 1 && lhs[0].as_ident().is_some() => {
                    let var = lhs[0].as_ident().unwrap().to_string();
                    let value = self.lower_value(&rhs[0], &loc, &mut pre)?;
                    control.init = Some((var, value));
                }
                Some(other) => pre.extend(self.lower_simple(other, &loc)?),
            }
            if *self.peek() != Tok::Semi {
                let e = self.expr()?;
                control.cond = Some(self.lower_condition(&e, &loc)?);
            }
            if *self.peek() != Tok::Semi {
                return Err(self.unexpected("';'"));
            }
            self.advance();
            if !self.is_punct("{") {
                let post = self.simple_stmt()?;
                control.post = Some(match post {
                    Simple::IncDec(Raw::Ident(v), "++") => Mutator::Incr(v),
                    Simple::IncDec(Raw::Ident(v), _) => Mutator::Decr(v),
                    other => Mutator::Other(self.simple_text(&other)),
                });
            }
        }
        self.no_composite = saved;
        let body = self.loop_body()?;
        pre.push(Stmt::new(StmtKind::For { control, body }, loc));
        Ok(pre)
    }

    fn lower_condition(&mut self, e: &Raw, loc: &Location) -> PResult<Condition> {
        if self.contains_recv(e) {
            return Err(self.error_at(loc, "receive in a loop condition is not supported"));
        }
        let mut sink = Vec::new();
        if let Raw::Binary(op, lhs, rhs) = e {
            let cmp = match *op {
                "<" => Some(CmpOp::Lt),
                ">" => Some(CmpOp::Gt),
                "<=" => Some(CmpOp::Le),
                ">=" => Some(CmpOp::Ge),
                "!=" => Some(CmpOp::Ne),
                "==" => Some(CmpOp::Eq),
                _ => None,
            };
            if let (Some(op), Some(var)) = (cmp, lhs.as_ident()) {
                if !self.consts.contains_key(var) {
                    let bound = self.lower_value(rhs, loc, &mut sink)?;
                    return Ok(Condition::Compare { var: var.to_string(), op, bound });
                }
            }
        }
        Ok(Condition::Other(self.lower_value(e, loc, &mut sink)?))
    }

    fn contains_recv(&self, e: &Raw) -> bool {
        let mut found = false;
        visit_raw(e, &mut |r| found |= matches!(r, Raw::Unary("<-", _)));
        found
    }

    fn simple_text(&self, s: &Simple) -> String {
        let list = |v: &[Raw]| v.iter().map(|e| e.substitute(&self.consts).text()).collect::<Vec<_>>().join(", ");
        match s {
            Simple::Expr(e) => e.substitute(&self.consts).text(),
            Simple::Define(l, r) => format!("{} := {}", list(l), list(r)),
            Simple::Assign(op, l, r) => format!("{} {op} {}", list(l), list(r)),
            Simple::IncDec(e, op) => format!("{}{op}", e.text()),
            Simple::Send(c, v) => format!("{} <- {}", c.text(), v.text()),
        }
    }

    fn switch_stmt(&mut self) -> PResult<Vec<Stmt>> {
        let loc = self.loc();
        self.advance(); // switch
        let mut pre = Vec::new();
        let saved = std::mem::replace(&mut self.no_composite, true);
        if !self.is_punct("{") {
            let first = if *self.peek() == Tok::Semi { None } else { Some(self.simple_stmt()?) };
            if *self.peek() == Tok::Semi {
                self.advance();
                if let Some(s) = first {
                    pre.extend(self.lower_simple(s, &loc)?);
                }
                if !self.is_punct("{") {
                    let tag = self.expr()?;
                    self.lower_value(&tag, &loc, &mut pre)?;
                }
            } else {
                match first {
                    Some(Simple::Expr(tag)) => {
                        self.lower_value(&tag, &loc, &mut pre)?;
                    }
                    _ => return Err(self.error_at(&loc, "type switches are not supported")),
                }
            }
        }
        self.no_composite = saved;
        self.expect_punct("{")?;
        let mut branches = Vec::new();
        let mut default: Option<Vec<Stmt>> = None;
        self.breakables.push(Breakable::Choice);
        loop {
            self.skip_semis();
            if self.eat_punct("}") {
                break;
            }
            if self.is_kw("case") {
                self.advance();
                let mut sink = Vec::new();
                for e in self.expr_list()? {
                    self.lower_value(&e, &loc, &mut sink)?;
                }
                self.expect_punct(":")?;
                branches.push(self.clause_body()?);
            } else if self.is_kw("default") {
                if default.is_some() {
                    return Err(self.error_here("multiple defaults in switch"));
                }
                self.advance();
                self.expect_punct(":")?;
                default = Some(self.clause_body()?);
            } else {
                return Err(self.unexpected("'case' or 'default'"));
            }
        }
        self.breakables.pop();
        let has_default = default.is_some();
        branches.extend(default);
        pre.push(Stmt::new(StmtKind::Switch { branches, has_default }, loc));
        Ok(pre)
    }

    fn select_stmt(&mut self) -> PResult<Vec<Stmt>> {
        let loc = self.loc();
        self.advance(); // select
        self.expect_punct("{")?;
        let mut cases = Vec::new();
        let mut default: Option<Vec<Stmt>> = None;
        self.breakables.push(Breakable::Choice);
        loop {
            self.skip_semis();
            if self.eat_punct("}") {
                break;
            }
            let case_loc = self.loc();
            if self.is_kw("case") {
                self.advance();
                let comm = self.simple_stmt()?;
                let comm = self.lower_comm(comm, &case_loc)?;
                self.expect_punct(":")?;
                let body = self.clause_body()?;
                cases.push(SelectCase { comm, body, loc: case_loc });
            } else if self.is_kw("default") {
                if default.is_some() {
                    return Err(self.error_here("multiple defaults in select"));
                }
                self.advance();
                self.expect_punct(":")?;
                default = Some(self.clause_body()?);
            } else {
                return Err(self.unexpected("'case' or 'default'"));
            }
        }
        self.breakables.pop();
        Ok(vec![Stmt::new(StmtKind::Select { cases, default }, loc)])
    }

    fn lower_comm(&mut self, s: Simple, loc: &Location) -> PResult<Comm> {
        let recv_of = |p: &mut Parser, e: &Raw| -> PResult<String> {
            match e.as_recv() {
                Some(ch) if p.is_chan(ch) => Ok(ch.to_string()),
                Some(ch) => Err(p.error_at(loc, format!("'{ch}' is not a channel"))),
                None => Err(p.error_at(loc, "select case must be a send or receive on a channel")),
            }
        };
        match s {
            Simple::Send(ch, value) => {
                let chan = self.chan_operand(&ch, loc)?;
                let mut pre = Vec::new();
                let value = self.lower_value(&value, loc, &mut pre)?;
                if !pre.is_empty() {
                    return Err(self.error_at(loc, "nested receive in a select case is not supported"));
                }
                Ok(Comm::Send { chan, value })
            }
            Simple::Expr(e) => Ok(Comm::Recv { target: None, chan: recv_of(self, &e)? }),
            Simple::Define(lhs, rhs) | Simple::Assign("=", lhs, rhs) if rhs.len() == 1 => {
                let chan = recv_of(self, &rhs[0])?;
                let target = lhs.first().and_then(|t| t.as_ident()).filter(|t| *t != "_").map(str::to_string);
                Ok(Comm::Recv { target, chan })
            }
            _ => Err(self.error_at(loc, "select case must be a send or receive on a channel")),
        }
    }

    fn chan_operand(&mut self, e: &Raw, loc: &Location) -> PResult<String> {
        match e.as_ident() {
            Some(ch) if self.is_chan(ch) => Ok(ch.to_string()),
            Some(ch) => Err(self.error_at(loc, format!("'{ch}' is not a channel"))),
            None => Err(self.error_at(loc, "channel operand must be a channel variable")),
        }
    }

    fn simple_stmt(&mut self) -> PResult<Simple> {
        let lhs = self.expr_list()?;
        match self.peek().clone() {
            Tok::Punct(":=") => {
                self.advance();
                Ok(Simple::Define(lhs, self.expr_list()?))
            }
            Tok::Punct(op @ ("=" | "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=" | "<<=" | ">>=" | "&^=")) => {
                self.advance();
                Ok(Simple::Assign(op, lhs, self.expr_list()?))
            }
            Tok::Punct(op @ ("++" | "--")) if lhs.len() == 1 => {
                self.advance();
                Ok(Simple::IncDec(lhs.into_iter().next().unwrap(), op))
            }
            Tok::Punct("<-") if lhs.len() == 1 => {
                self.advance();
                let value = self.expr()?;
                Ok(Simple::Send(lhs.into_iter().next().unwrap(), value))
            }
            _ if lhs.len() == 1 => Ok(Simple::Expr(lhs.into_iter().next().unwrap())),
            _ => Err(self.unexpected("':=' or '='")),
        }
    }

    fn lower_simple(&mut self, s: Simple, loc: &Location) -> PResult<Vec<Stmt>> {
        let mut pre = Vec::new();
        let kind = match s {
            Simple::Send(ch, value) => {
                let chan = self.chan_operand(&ch, loc)?;
                let value = self.lower_value(&value, loc, &mut pre)?;
                StmtKind::Send { chan, value }
            }
            Simple::IncDec(target, op) => {
                let t = target.substitute(&self.consts).text();
                let sign = if op == "++" { "+" } else { "-" };
                StmtKind::Assign {
                    targets: vec![t.clone()],
                    value: Some(Expr::opaque(format!("{t} {sign} 1"))),
                    define: false,
                }
            }
            Simple::Define(lhs, rhs) | Simple::Assign("=", lhs, rhs)
                if rhs.len() == 1 && lhs.len() <= 2 && rhs[0].as_recv().is_some() =>
            {
                let chan = self.chan_operand(rhs[0].as_recv().map(|c| Raw::Ident(c.into())).as_ref().unwrap(), loc)?;
                let target = lhs[0].as_ident().filter(|t| *t != "_").map(str::to_string);
                StmtKind::Recv { target, chan }
            }
            Simple::Define(lhs, rhs) | Simple::Assign("=", lhs, rhs)
                if lhs.len() == 1 && rhs.len() == 1 && make_chan(&rhs[0]).is_some() =>
            {
                let Some(name) = lhs[0].as_ident().map(str::to_string) else {
                    return Err(self.error_at(loc, "channel must be bound to a plain variable"));
                };
                let cap = make_chan(&rhs[0]).unwrap();
                let capacity = match cap {
                    Some(e) => self.lower_value(&e, loc, &mut pre)?,
                    None => Expr::IntLit(0),
                };
                self.declare_chan(&name);
                StmtKind::MakeChan { name, capacity }
            }
            Simple::Define(lhs, rhs) => {
                let define = true;
                self.lower_assign(lhs, rhs, define, loc, &mut pre)?
            }
            Simple::Assign(op, lhs, rhs) => {
                if op == "=" {
                    self.lower_assign(lhs, rhs, false, loc, &mut pre)?
                } else {
                    let t = lhs[0].substitute(&self.consts).text();
                    let r = self.lower_value(&rhs[0], loc, &mut pre)?;
                    let bin = &op[..op.len() - 1];
                    StmtKind::Assign {
                        targets: vec![t.clone()],
                        value: Some(Expr::opaque(format!("{t} {bin} {}", r.text()))),
                        define: false,
                    }
                }
            }
            Simple::Expr(e) => {
                if let Some(ch) = e.as_recv() {
                    let chan = self.chan_operand(&Raw::Ident(ch.to_string()), loc)?;
                    StmtKind::Recv { target: None, chan }
                } else if let Raw::Call(callee, args, _) = e {
                    if callee.as_ident() == Some("close") && !self.func_names.contains("close") {
                        if args.len() != 1 {
                            return Err(self.error_at(loc, "close takes exactly one channel"));
                        }
                        let chan = self.chan_operand(&args[0], loc)?;
                        StmtKind::Close { chan }
                    } else {
                        let (callee, args) = self.lower_call(*callee, args, loc, &mut pre)?;
                        StmtKind::Call { callee, args }
                    }
                } else {
                    return Err(self.error_at(loc, "expression statement is not supported"));
                }
            }
        };
        pre.push(Stmt::new(kind, loc.clone()));
        Ok(pre)
    }

    fn lower_assign(
        &mut self,
        lhs: Vec<Raw>,
        rhs: Vec<Raw>,
        define: bool,
        loc: &Location,
        pre: &mut Vec<Stmt>,
    ) -> PResult<StmtKind> {
        let targets: Vec<String> = lhs.iter().map(|t| t.substitute(&self.consts).text()).collect();
        for t in &targets {
            if self.frames.iter().any(|f| f.chans.contains(t)) {
                return Err(self.error_at(loc, format!("reassigning channel '{t}' is not supported")));
            }
        }
        let mut values = Vec::new();
        for r in &rhs {
            if let Raw::FuncLit(_) = r {
                return Err(self.error_at(loc, "function values are not supported"));
            }
            if let Some(ch) = r.as_ident() {
                if self.is_chan(ch) {
                    return Err(self.error_at(loc, "channel aliasing is not supported"));
                }
            }
            values.push(self.lower_value(r, loc, pre)?);
        }
        let value = match values.len() {
            0 => None,
            1 => values.pop(),
            _ => Some(Expr::Opaque(Opaque {
                text: values.iter().map(Expr::text).collect::<Vec<_>>().join(", "),
                idents: values.iter().flat_map(|v| v.idents().into_iter().map(str::to_string)).collect(),
            })),
        };
        Ok(StmtKind::Assign { targets, value, define })
    }

    fn lower_call(
        &mut self,
        callee: Raw,
        args: Vec<Raw>,
        loc: &Location,
        pre: &mut Vec<Stmt>,
    ) -> PResult<(String, Vec<Arg>)> {
        let mut lowered = Vec::new();
        for a in &args {
            match a.as_ident() {
                Some(c) if self.is_chan(c) => lowered.push(Arg::Chan(c.to_string())),
                _ => {
                    if let Raw::FuncLit(_) = a {
                        return Err(self.error_at(loc, "function values are not supported"));
                    }
                    lowered.push(Arg::Value(self.lower_value(a, loc, pre)?))
                }
            }
        }
        let name = match callee {
            Raw::FuncLit(lit) => {
                let FuncLit { name, mut params, body, captures, loc: fl } = *lit;
                if params.iter().filter(|p| p.is_chan).count() != lowered.iter().filter(|a| a.as_chan().is_some()).count()
                    && params.len() == lowered.len()
                {
                    return Err(self.error_at(loc, "channel arguments do not match channel parameters"));
                }
                for c in &captures {
                    params.push(Param { name: c.clone(), is_chan: true });
                    // A capture of an enclosing closure's capture is resolved there.
                    self.is_chan(c);
                    lowered.push(Arg::Chan(c.clone()));
                }
                let idx = self.lifted.len();
                let order = name.rsplit("func").next().and_then(|n| n.parse::<usize>().ok()).unwrap_or(idx);
                self.lifted.push((order, FuncDecl { name: name.clone(), params, body, loc: fl }));
                name
            }
            Raw::Ident(n) => n,
            Raw::Selector(..) => callee.text(),
            Raw::Paren(inner) => return self.lower_call(*inner, args, loc, pre),
            other => return Err(self.error_at(loc, format!("unsupported callee '{}'", other.text()))),
        };
        Ok((name, lowered))
    }

    /// Lower a value expression. Receives nested in it are hoisted into
    /// `pre` as separate statements, in evaluation order.
    fn lower_value(&mut self, e: &Raw, loc: &Location, pre: &mut Vec<Stmt>) -> PResult<Expr> {
        let mut recvs = Vec::new();
        let mut bad: Option<String> = None;
        visit_raw(e, &mut |r| {
            if let Raw::Unary("<-", inner) = r {
                match inner.as_ident() {
                    Some(ch) => recvs.push(ch.to_string()),
                    None => bad = Some(inner.text()),
                }
            }
            if let Raw::FuncLit(_) = r {
                bad = Some("function literal".into());
            }
        });
        if let Some(b) = bad {
            return Err(self.error_at(loc, format!("unsupported expression: receive from or use of '{b}'")));
        }
        for ch in &recvs {
            let chan = self.chan_operand(&Raw::Ident(ch.clone()), loc)?;
            pre.push(Stmt::new(StmtKind::Recv { target: None, chan }, loc.clone()));
        }
        let sub = e.substitute(&self.consts);
        if let Some(n) = sub.fold(&self.consts) {
            return Ok(Expr::IntLit(n));
        }
        match &sub {
            Raw::Ident(n) if n == "true" => return Ok(Expr::BoolLit(true)),
            Raw::Ident(n) if n == "false" => return Ok(Expr::BoolLit(false)),
            Raw::Ident(n) => {
                self.is_chan(n);
                return Ok(Expr::Var(n.clone()));
            }
            _ => {}
        }
        let mut idents = Vec::new();
        sub.collect_idents(&mut idents);
        idents.retain(|i| !i.starts_with(RECV_PREFIX));
        Ok(Expr::Opaque(Opaque { text: sub.text(), idents }))
    }

    // -- expressions --------------------------------------------------------

    fn expr_list(&mut self) -> PResult<Vec<Raw>> {
        let mut v = vec![self.expr()?];
        while self.eat_punct(",") {
            v.push(self.expr()?);
        }
        Ok(v)
    }

    fn expr(&mut self) -> PResult<Raw> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Raw> {
        let mut lhs = self.unary_expr()?;
        while let Some((op, prec)) = Self::binary_op(self.peek()) {
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Raw::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn binary_op(t: &Tok) -> Option<(&'static str, u8)> {
        let Tok::Punct(op) = t else { return None };
        let prec = match *op {
            "||" => 1,
            "&&" => 2,
            "==" | "!=" | "<" | "<=" | ">" | ">=" => 3,
            "+" | "-" | "|" | "^" => 4,
            "*" | "/" | "%" | "<<" | ">>" | "&" | "&^" => 5,
            _ => return None,
        };
        Some((op, prec))
    }

    fn unary_expr(&mut self) -> PResult<Raw> {
        if let Tok::Punct(op @ ("+" | "-" | "!" | "^" | "*" | "&" | "<-")) = self.peek().clone() {
            self.advance();
            let e = self.unary_expr()?;
            return Ok(Raw::Unary(op, Box::new(e)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Raw> {
        let mut e = self.operand()?;
        loop {
            match self.peek().clone() {
                Tok::Punct(".") => {
                    self.advance();
                    if self.is_punct("(") {
                        return Err(self.error_here("type assertions are not supported"));
                    }
                    let f = self.expect_ident()?;
                    e = Raw::Selector(Box::new(e), f);
                }
                Tok::Punct("[") => {
                    self.advance();
                    let saved = std::mem::replace(&mut self.no_composite, false);
                    let lo = if self.is_punct(":") { None } else { Some(Box::new(self.expr()?)) };
                    if self.eat_punct(":") {
                        let hi = if self.is_punct("]") { None } else { Some(Box::new(self.expr()?)) };
                        self.expect_punct("]")?;
                        e = Raw::Slice(Box::new(e), lo, hi);
                    } else {
                        self.expect_punct("]")?;
                        e = Raw::Index(Box::new(e), lo.unwrap());
                    }
                    self.no_composite = saved;
                }
                Tok::Punct("(") => {
                    self.advance();
                    let saved = std::mem::replace(&mut self.no_composite, false);
                    let mut args = Vec::new();
                    let mut dots = false;
                    let type_first = matches!(e.as_ident(), Some("make" | "new"));
                    while !self.is_punct(")") {
                        if type_first && args.is_empty() {
                            args.push(Raw::Type(self.parse_type()?));
                        } else {
                            args.push(self.expr()?);
                        }
                        if self.eat_punct("...") {
                            dots = true;
                        }
                        if !self.is_punct(")") {
                            self.expect_punct(",")?;
                            self.skip_semis();
                        }
                    }
                    self.expect_punct(")")?;
                    self.no_composite = saved;
                    e = Raw::Call(Box::new(e), args, dots);
                }
                Tok::Punct("{") if !self.no_composite && is_type_like(&e) => {
                    let ty = e.text();
                    e = Raw::Composite(ty, self.composite_elems()?);
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn composite_elems(&mut self) -> PResult<Vec<Raw>> {
        self.expect_punct("{")?;
        let saved = std::mem::replace(&mut self.no_composite, false);
        let mut elems = Vec::new();
        loop {
            self.skip_semis();
            if self.eat_punct("}") {
                break;
            }
            let v = if self.is_punct("{") {
                Raw::Composite(String::new(), self.composite_elems()?)
            } else {
                self.expr()?
            };
            let v = if self.eat_punct(":") {
                let rhs = if self.is_punct("{") {
                    Raw::Composite(String::new(), self.composite_elems()?)
                } else {
                    self.expr()?
                };
                Raw::KeyValue(Box::new(v), Box::new(rhs))
            } else {
                v
            };
            elems.push(v);
            self.skip_semis();
            if !self.is_punct("}") {
                self.expect_punct(",")?;
            }
        }
        self.no_composite = saved;
        Ok(elems)
    }

    fn operand(&mut self) -> PResult<Raw> {
        match self.peek().clone() {
            Tok::Int(t) => {
                self.advance();
                Ok(Raw::Int(t))
            }
            Tok::Lit(t) => {
                self.advance();
                Ok(Raw::Lit(t))
            }
            Tok::Ident(n) => {
                self.advance();
                Ok(Raw::Ident(n))
            }
            Tok::Punct("(") => {
                self.advance();
                let saved = std::mem::replace(&mut self.no_composite, false);
                let e = self.expr()?;
                self.expect_punct(")")?;
                self.no_composite = saved;
                Ok(Raw::Paren(Box::new(e)))
            }
            Tok::Punct("[") | Tok::Keyword("map") | Tok::Keyword("struct") => {
                let ty = self.parse_type()?;
                if self.is_punct("{") {
                    let elems = self.composite_elems()?;
                    Ok(Raw::Composite(ty.text, elems))
                } else {
                    Ok(Raw::Type(ty))
                }
            }
            Tok::Keyword("chan") => Ok(Raw::Type(self.parse_type()?)),
            Tok::Keyword("func") => self.func_lit(),
            _ => Err(self.unexpected("expression")),
        }
    }

    fn func_lit(&mut self) -> PResult<Raw> {
        let loc = self.loc();
        self.advance(); // func
        self.anon_counter += 1;
        let mut name = format!("{}_func{}", self.top_func, self.anon_counter);
        while self.func_names.contains(&name) {
            self.anon_counter += 1;
            name = format!("{}_func{}", self.top_func, self.anon_counter);
        }
        let params = self.param_list()?;
        self.result_type()?;
        let mut frame = Frame { chans: HashSet::new(), captures: Vec::new() };
        frame.chans.extend(params.iter().filter(|p| p.is_chan).map(|p| p.name.clone()));
        self.frames.push(frame);
        let saved_breakables = std::mem::take(&mut self.breakables);
        let body = self.block();
        self.breakables = saved_breakables;
        let frame = self.frames.pop().expect("frame pushed above");
        let body = body?;
        Ok(Raw::FuncLit(Box::new(FuncLit { name, params, body, captures: frame.captures, loc })))
    }
}

fn is_type_like(e: &Raw) -> bool {
    match e {
        Raw::Ident(n) => n.chars().next().is_some_and(|c| c.is_uppercase()) || n == "T",
        Raw::Selector(inner, _) => matches!(**inner, Raw::Ident(_)),
        Raw::Type(_) => true,
        _ => false,
    }
}

/// `make(chan T[, cap])` → `Some(cap)`.
fn make_chan(e: &Raw) -> Option<Option<Raw>> {
    let Raw::Call(f, args, _) = e else { return None };
    if f.as_ident() != Some("make") {
        return None;
    }
    match args.first() {
        Some(Raw::Type(t)) if t.is_chan => Some(args.get(1).cloned()),
        _ => None,
    }
}

fn visit_raw(e: &Raw, f: &mut dyn FnMut(&Raw)) {
    f(e);
    match e {
        Raw::Paren(x) | Raw::Unary(_, x) | Raw::Selector(x, _) => visit_raw(x, f),
        Raw::Binary(_, a, b) | Raw::Index(a, b) | Raw::KeyValue(a, b) => {
            visit_raw(a, f);
            visit_raw(b, f);
        }
        Raw::Slice(x, lo, hi) => {
            visit_raw(x, f);
            for y in [lo, hi].into_iter().flatten() {
                visit_raw(y, f);
            }
        }
        Raw::Call(c, args, _) => {
            visit_raw(c, f);
            args.iter().for_each(|a| visit_raw(a, f));
        }
        Raw::Composite(_, elems) => elems.iter().for_each(|a| visit_raw(a, f)),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(src: &str) -> Vec<StmtKind> {
        let p = parse_program(src).unwrap();
        p.decls[0].body.iter().map(|s| s.kind.clone()).collect()
    }

    #[test]
    fn minimal_make() {
        let p = parse_program("func main(){ a := make(chan, 0) }").unwrap();
        assert_eq!(p.decls.len(), 1);
        assert_eq!(
            p.decls[0].body[0].kind,
            StmtKind::MakeChan { name: "a".into(), capacity: Expr::IntLit(0) }
        );
    }

    #[test]
    fn make_without_capacity_is_synchronous() {
        let b = body("func main() {\n c := make(chan int)\n}");
        assert_eq!(b[0], StmtKind::MakeChan { name: "c".into(), capacity: Expr::IntLit(0) });
    }

    #[test]
    fn error_points_at_brace() {
        let e = parse_program("func f( {").unwrap_err();
        assert_eq!((e.line, e.column), (1, 9));
        assert!(e.message.contains("'{'"), "{e}");
    }

    #[test]
    fn constants_are_inlined() {
        let b = body("const N = 2\nfunc main() {\n c := make(chan int, N*3)\n for i := 0; i < N; i++ {}\n}");
        assert_eq!(b[0], StmtKind::MakeChan { name: "c".into(), capacity: Expr::IntLit(6) });
        let StmtKind::For { control, .. } = &b[1] else { panic!() };
        assert_eq!(
            control.cond,
            Some(Condition::Compare { var: "i".into(), op: CmpOp::Lt, bound: Expr::IntLit(2) })
        );
    }

    #[test]
    fn opaque_text_is_whitespace_insensitive() {
        let a = body("func main() {\n c := make(chan int, len( files ))\n}");
        let b = body("func main() {\n c := make(chan int, len(files))\n}");
        assert_eq!(a, b);
        let StmtKind::MakeChan { capacity, .. } = &a[0] else { panic!() };
        assert_eq!(capacity.text(), "len(files)");
    }

    #[test]
    fn anonymous_functions_are_lifted_with_captures() {
        let p = parse_program(
            "func main() {\n ch := make(chan int)\n go func(n int) { ch <- n }(1)\n <-ch\n}",
        )
        .unwrap();
        assert_eq!(p.decls.len(), 2);
        let lifted = &p.decls[1];
        assert_eq!(lifted.name, "main_func1");
        assert_eq!(
            lifted.params,
            vec![Param { name: "n".into(), is_chan: false }, Param { name: "ch".into(), is_chan: true }]
        );
        let StmtKind::Go { callee, args } = &p.decls[0].body[1].kind else { panic!() };
        assert_eq!(callee, "main_func1");
        assert_eq!(args[1], Arg::Chan("ch".into()));
    }

    #[test]
    fn nested_receives_are_hoisted() {
        let b = body("func main() {\n c := make(chan int)\n x := <-c + 1\n fmt.Println(<-c)\n}");
        assert_eq!(b[1], StmtKind::Recv { target: None, chan: "c".into() });
        assert!(matches!(&b[2], StmtKind::Assign { .. }));
        assert_eq!(b[3], StmtKind::Recv { target: None, chan: "c".into() });
        assert!(matches!(&b[4], StmtKind::Call { callee, .. } if callee == "fmt.Println"));
    }

    #[test]
    fn loop_forms() {
        let b = body(
            "func main() {\n for i := n; i > 0; i-- {}\n for {}\n for x < 3 {}\n for _, f := range files {}\n}",
        );
        let StmtKind::For { control, .. } = &b[0] else { panic!() };
        assert_eq!(control.init, Some(("i".into(), Expr::Var("n".into()))));
        assert_eq!(control.post, Some(Mutator::Decr("i".into())));
        let StmtKind::For { control, .. } = &b[1] else { panic!() };
        assert!(control.is_unconditional());
        let StmtKind::For { control, .. } = &b[2] else { panic!() };
        assert!(control.init.is_none() && control.cond.is_some());
        assert!(matches!(&b[3], StmtKind::ForRange { key: None, value: Some(v), .. } if v == "f"));
    }

    #[test]
    fn select_and_range_over_channel() {
        let b = body(
            "func main() {\n c := make(chan int)\n select {\n case v := <-c:\n  print(v)\n case c <- 1:\n default:\n }\n for v2 := range c {}\n}",
        );
        let StmtKind::Select { cases, default } = &b[1] else { panic!() };
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].comm, Comm::Recv { target: Some("v".into()), chan: "c".into() });
        assert!(default.is_some());
        assert!(matches!(&b[2], StmtKind::RangeChan { chan, .. } if chan == "c"));
    }

    #[test]
    fn switch_records_default() {
        let b = body("func main() {\n switch x {\n case 1:\n case 2:\n }\n}");
        assert_eq!(b[0], StmtKind::Switch { branches: vec![vec![], vec![]], has_default: false });
    }

    #[test]
    fn rejects_unsupported_constructs() {
        for src in [
            "func main() {\n defer f()\n}",
            "func main() {\n var c chan int\n}",
            "func main() {\n break\n}",
            "func main() {\n c := make(chan int)\n select {\n default:\n default:\n }\n}",
            "type T struct{}",
            "func (t T) m() {}",
        ] {
            assert!(parse_program(src).is_err(), "{src}");
        }
    }

    #[test]
    fn send_to_non_channel_is_an_error() {
        let e = parse_program("func main() {\n x := 1\n x <- 2\n}").unwrap_err();
        assert_eq!(e.line, 3);
    }
}
