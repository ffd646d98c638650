//! Pretty-printer producing MiniGo source that parses back to the same AST.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(p: &Program) -> String {
    let mut out = String::from("package main\n");
    for d in &p.decls {
        out.push('\n');
        print_func(&mut out, d);
    }
    out
}

fn print_func(out: &mut String, d: &FuncDecl) {
    let params: Vec<String> = d
        .params
        .iter()
        .map(|p| format!("{} {}", p.name, if p.is_chan { "chan int" } else { "int" }))
        .collect();
    let _ = writeln!(out, "func {}({}) {{", d.name, params.join(", "));
    print_block(out, &d.body, 1);
    out.push_str("}\n");
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push('\t');
    }
}

fn print_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        print_stmt(out, s, depth);
    }
}

fn args_text(args: &[Arg]) -> String {
    args.iter()
        .map(|a| match a {
            Arg::Chan(c) => c.clone(),
            Arg::Value(e) => e.text(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn recv_text(target: &Option<String>, chan: &str) -> String {
    match target {
        Some(t) => format!("{t} := <-{chan}"),
        None => format!("<-{chan}"),
    }
}

fn control_text(c: &LoopControl) -> String {
    let cond = match &c.cond {
        Some(Condition::Compare { var, op, bound }) => format!("{var} {} {bound}", op.symbol()),
        Some(Condition::Other(e)) => e.text(),
        None => String::new(),
    };
    if c.init.is_none() && c.post.is_none() {
        return cond;
    }
    let init = c.init.as_ref().map(|(v, e)| format!("{v} := {e}")).unwrap_or_default();
    let post = match &c.post {
        Some(Mutator::Incr(v)) => format!("{v}++"),
        Some(Mutator::Decr(v)) => format!("{v}--"),
        Some(Mutator::Other(t)) => t.clone(),
        None => String::new(),
    };
    format!("{init}; {cond}; {post}")
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::MakeChan { name, capacity } => {
            let _ = writeln!(out, "{name} := make(chan int, {capacity})");
        }
        StmtKind::Send { chan, value } => {
            let _ = writeln!(out, "{chan} <- {value}");
        }
        StmtKind::Recv { target, chan } => {
            let _ = writeln!(out, "{}", recv_text(target, chan));
        }
        StmtKind::Close { chan } => {
            let _ = writeln!(out, "close({chan})");
        }
        StmtKind::Select { cases, default } => {
            out.push_str("select {\n");
            for c in cases {
                indent(out, depth);
                match &c.comm {
                    Comm::Send { chan, value } => {
                        let _ = writeln!(out, "case {chan} <- {value}:");
                    }
                    Comm::Recv { target, chan } => {
                        let _ = writeln!(out, "case {}:", recv_text(target, chan));
                    }
                }
                print_block(out, &c.body, depth + 1);
            }
            if let Some(d) = default {
                indent(out, depth);
                out.push_str("default:\n");
                print_block(out, d, depth + 1);
            }
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Call { callee, args } => {
            let _ = writeln!(out, "{callee}({})", args_text(args));
        }
        StmtKind::Go { callee, args } => {
            let _ = writeln!(out, "go {callee}({})", args_text(args));
        }
        StmtKind::Block(b) => {
            out.push_str("{\n");
            print_block(out, b, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            let _ = writeln!(out, "if {cond} {{");
            print_block(out, then_branch, depth + 1);
            indent(out, depth);
            if else_branch.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                print_block(out, else_branch, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
        StmtKind::For { control, body } => {
            let header = control_text(control);
            if header.is_empty() {
                out.push_str("for {\n");
            } else {
                let _ = writeln!(out, "for {header} {{");
            }
            print_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::ForRange { key, value, over, body } => {
            let vars = match (key, value) {
                (None, None) => String::new(),
                (k, None) => format!("{} := ", k.as_deref().unwrap_or("_")),
                (k, Some(v)) => format!("{}, {v} := ", k.as_deref().unwrap_or("_")),
            };
            let _ = writeln!(out, "for {vars}range {over} {{");
            print_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::RangeChan { target, chan, body } => {
            let vars = target.as_ref().map(|t| format!("{t} := ")).unwrap_or_default();
            let _ = writeln!(out, "for {vars}range {chan} {{");
            print_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Switch { branches, has_default } => {
            out.push_str("switch {\n");
            let n = branches.len();
            for (i, b) in branches.iter().enumerate() {
                indent(out, depth);
                if *has_default && i + 1 == n {
                    out.push_str("default:\n");
                } else {
                    let _ = writeln!(out, "case {i}:");
                }
                print_block(out, b, depth + 1);
            }
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Break => out.push_str("break\n"),
        StmtKind::Return => out.push_str("return\n"),
        StmtKind::Assign { targets, value, define } => {
            let t = targets.join(", ");
            match value {
                None => {
                    let _ = writeln!(out, "var {t} int");
                }
                Some(v) => {
                    let op = if *define { ":=" } else { "=" };
                    let _ = writeln!(out, "{t} {op} {v}");
                }
            }
        }
    }
}
