//! Human-readable and JSON rendering of reports.

use std::fmt::Write;

use super::report::{PartitionReport, Report};
use crate::checker::ViolationKind;

fn mark(ok: bool) -> &'static str {
    if ok {
        "✓"
    } else {
        "✗"
    }
}

fn row(p: &PartitionReport) -> [String; 7] {
    let (gd, leak) = if p.stopped_early {
        ("-".to_string(), "-".to_string())
    } else {
        (mark(p.global_deadlock_free).to_string(), mark(!p.leaks).to_string())
    };
    [
        format!("{}:{}", p.file, p.name),
        p.states_explored.to_string(),
        mark(p.channel_safe).to_string(),
        gd,
        leak,
        p.extract_millis.to_string(),
        p.check_millis.to_string(),
    ]
}

fn kind_text(k: ViolationKind) -> &'static str {
    match k {
        ViolationKind::ChannelSafety => "channel safety",
        ViolationKind::GlobalDeadlock => "global deadlock",
        ViolationKind::Leak => "goroutine leak",
    }
}

pub fn render_human(r: &Report) -> String {
    let header = ["PARTITION", "STATES", "CS", "GD", "LEAK", "EXTRACT(ms)", "CHECK(ms)"].map(String::from);
    let rows: Vec<[String; 7]> = r.partitions.iter().map(row).collect();
    let mut widths = header.clone().map(|h| h.chars().count());
    for cells in &rows {
        for (w, c) in widths.iter_mut().zip(cells) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for cells in std::iter::once(&header).chain(&rows) {
        let mut line = String::new();
        for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
            let pad = w - c.chars().count();
            if i == 0 {
                let _ = write!(line, "{c}{}", " ".repeat(pad));
            } else {
                let _ = write!(line, "  {}{c}", " ".repeat(pad));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    for p in &r.partitions {
        let mut notes = Vec::new();
        for a in &p.free_params {
            notes.push(format!(
                "  {} = {} ({} {} at {})",
                a.name,
                a.value,
                a.role,
                a.expr.as_deref().unwrap_or("unrecognized loop"),
                a.origin
            ));
        }
        if p.resource_bound_hit {
            notes.push("  search incomplete: process or state cap reached".to_string());
        }
        if let Some(f) = &p.promela_file {
            notes.push(format!("  promela: {f}"));
        }
        if let (Some(k), Some(t)) = (p.violation, &p.trace) {
            notes.push(format!("  {} trace:", kind_text(k)));
            notes.extend(t.iter().map(|e| format!("    {e}")));
        }
        if !notes.is_empty() {
            let _ = writeln!(out, "\n{}:{}", p.file, p.name);
            for n in notes {
                out.push_str(&n);
                out.push('\n');
            }
        }
    }
    for w in &r.assumption_warnings {
        let _ = writeln!(out, "\nwarning: {}: {}", w.file, w.violation);
    }
    let t = &r.totals;
    let _ = writeln!(
        out,
        "\n{} partitions, {} with violations, {} states, extract {} ms, check {} ms",
        t.partitions, t.violated, t.states_explored, t.extract_millis, t.check_millis
    );
    out
}

pub fn render_json(r: &Report) -> String {
    serde_json::to_string_pretty(r).expect("reports serialize")
}

pub fn render_report(r: &Report, json: bool) -> String {
    if json {
        render_json(r)
    } else {
        render_human(r)
    }
}
