//! CSV and plain-text renderings of a report.

use std::fmt::Write as _;

use girsanov_core::scenarios::list_scenarios;

use crate::config::OutputFormat;
use crate::report::Report;

pub const CSV_COLUMNS: [&str; 10] = ["scenario", "t", "estimator", "value", "ci_lo", "ci_hi", "N", "h", "K_max", "seed"];

/// Widest line the text renderer emits.
pub const TEXT_WIDTH: usize = 120;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    let seed = report.config.get("mc.seed").cloned().unwrap_or_default();
    for r in &report.estimates {
        w.write_record([
            report.scenario.name.clone(),
            opt(r.t),
            r.estimator.clone(),
            r.value.to_string(),
            opt(r.ci_lo),
            opt(r.ci_hi),
            r.n.to_string(),
            r.h.to_string(),
            r.k_max.to_string(),
            seed.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 records")
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else if v != 0.0 && (v.abs() >= 1e6 || v.abs() < 1e-4) {
        format!("{v:.4e}")
    } else {
        format!("{v:.6}")
    }
}

/// Greedy word wrap to `width` columns with a hanging indent.
fn wrap(out: &mut String, text: &str, first: &str, indent: usize, width: usize) {
    if first.chars().count() + text.chars().count() <= width && !text.contains('\n') {
        out.push_str(first);
        out.push_str(text);
        out.push('\n');
        return;
    }
    let mut line = first.to_string();
    let mut fresh = true;
    for word in text.split_whitespace() {
        let extra = if fresh { 0 } else { 1 };
        if !fresh && line.chars().count() + extra + word.chars().count() > width {
            out.push_str(line.trim_end());
            out.push('\n');
            line = " ".repeat(indent);
            fresh = true;
        }
        if !fresh {
            line.push(' ');
        }
        // A single word longer than the line is cut.
        let room = width.saturating_sub(line.chars().count());
        line.extend(word.chars().take(room.max(1)));
        fresh = false;
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

/// Wraps `text` to the text width with a hanging indent.
pub fn wrap_into(out: &mut String, text: &str, indent: usize) {
    wrap(out, text, &" ".repeat(indent), indent, TEXT_WIDTH);
}

pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let head = format!(
        "{} {}  scenario={}  operation={}",
        report.artifact.name, report.artifact.version, report.scenario.name, report.operation
    );
    wrap(&mut out, &head, "", 2, TEXT_WIDTH);
    let cfg = &report.config;
    let get = |k: &str| cfg.get(k).map(String::as_str).unwrap_or("-");
    let _ = writeln!(
        out,
        "N={}  h={}  K_max={}  N_max={}  seed={}  workers={}",
        get("mc.n"),
        get("mc.h"),
        get("mc.k_max"),
        get("mc.n_max"),
        get("mc.seed"),
        get("mc.workers")
    );

    if let Some(v) = &report.verdict {
        let _ = writeln!(
            out,
            "verdict: {}  (expected {}, UI status from {})",
            v.classification, v.expected, v.ui_source
        );
    }

    if !report.estimates.is_empty() {
        out.push('\n');
        let _ = writeln!(
            out,
            "{:>10}  {:<13}  {:>14}  {:>14}  {:>14}  {:>12}  {:>9}  {:>10}",
            "t", "estimator", "value", "ci_lo", "ci_hi", "se", "N", "h"
        );
        for r in &report.estimates {
            let _ = writeln!(
                out,
                "{:>10}  {:<13}  {:>14}  {:>14}  {:>14}  {:>12}  {:>9}  {:>10}",
                r.t.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
                r.estimator,
                num(r.value),
                r.ci_lo.map(num).unwrap_or_else(|| "-".into()),
                r.ci_hi.map(num).unwrap_or_else(|| "-".into()),
                r.se.map(num).unwrap_or_else(|| "-".into()),
                r.n,
                r.h
            );
        }
    }

    if let Some(v) = &report.verdict {
        out.push('\n');
        let _ = writeln!(
            out,
            "{:>10}  {:>14}  {:>14}  {:>14}  {:>14}  decision",
            "t", "exploded", "ci_lo", "ci_hi", "guard"
        );
        for p in &v.per_time {
            let _ = writeln!(
                out,
                "{:>10}  {:>14}  {:>14}  {:>14}  {:>14}  {}",
                p.t,
                num(p.exploded),
                num(p.ci_lo),
                num(p.ci_hi),
                num(p.guard_fraction),
                p.decision
            );
        }
        let hz = &v.horizon;
        let line = format!(
            "horizon {}: exploded {} [{}, {}], {}, stabilized={} (mean QV {} at H/2, {} at H)",
            hz.t,
            num(hz.exploded),
            num(hz.ci_lo),
            num(hz.ci_hi),
            hz.decision,
            hz.stabilized,
            num(v.stabilization[0]),
            num(v.stabilization[1])
        );
        wrap(&mut out, &line, "", 4, TEXT_WIDTH);
    }

    if !report.sensitivity.is_empty() {
        out.push('\n');
        for row in &report.sensitivity {
            let counts: Vec<String> = row.exploded.iter().map(ToString::to_string).collect();
            let label = if row.classification.is_empty() { "-" } else { &row.classification };
            let line = format!("K_max={:<10} {:<16} exploded by t: {}", row.k_max.to_string(), label, counts.join(" "));
            wrap(&mut out, &line, "", 4, TEXT_WIDTH);
        }
    }

    if let Some(rows) = &report.consistency {
        out.push('\n');
        for c in rows {
            let line = format!(
                "t={}: E[Z]={} Q(finite)={} diff={} combined_se={} pass={} one_sided={}",
                c.t,
                num(c.expectation),
                num(c.finite),
                num(c.difference),
                num(c.combined_se),
                c.pass,
                c.one_sided_pass
            );
            wrap(&mut out, &line, "", 4, TEXT_WIDTH);
        }
    }

    if let Some(f) = &report.feller {
        out.push('\n');
        let _ = writeln!(out, "Feller test, preset {} on ({}, {})", f.preset, f.lower, f.upper);
        for (side, e) in [("left", &f.left), ("right", &f.right)] {
            let _ = writeln!(
                out,
                "  {side:<5}  {:<13}  v={}  level={}  steps={}  converged={}",
                e.behaviour,
                num(e.value),
                e.level,
                e.steps,
                e.converged
            );
        }
    }

    if let Some(c) = &report.convergence {
        if !c.fits.is_empty() {
            out.push('\n');
        }
        for f in &c.fits {
            let _ = writeln!(
                out,
                "bias fit t={} {}: value = {} + {} * h  (N={})",
                f.t,
                f.estimator,
                num(f.intercept),
                num(f.slope),
                f.n
            );
        }
    }

    let fl = &report.flags;
    if fl.large_jumps > 0 || fl.numeric_failures > 0 || !fl.heavy_tail.is_empty() {
        out.push('\n');
        let heavy: Vec<String> = fl.heavy_tail.iter().map(ToString::to_string).collect();
        let line = format!(
            "flags: large_jumps={} numeric_failures={} heavy_tail_at=[{}]",
            fl.large_jumps,
            fl.numeric_failures,
            heavy.join(", ")
        );
        wrap(&mut out, &line, "", 4, TEXT_WIDTH);
    }
    for w in &report.warnings {
        wrap(&mut out, w, "warning: ", 9, TEXT_WIDTH);
    }
    let _ = writeln!(out, "runtime: {:.2} s", report.runtime_seconds);
    out
}

pub fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => render_csv(report),
        OutputFormat::Text => render_text(report),
    }
}

/// The `list` subcommand.
pub fn render_catalog() -> String {
    let mut out = String::new();
    let w = list_scenarios().iter().map(|e| e.name.len()).max().unwrap_or(0);
    for e in list_scenarios() {
        let first = format!("{:<w$}  {:<16} ", e.name, e.expected.as_str());
        wrap(&mut out, e.description, &first, w + 19, TEXT_WIDTH);
    }
    out
}
