use std::fmt::Write;

use super::ast::*;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(BinOp::Or, ..) => 1,
        ExprKind::Binary(BinOp::And, ..) => 2,
        ExprKind::Not(_) => 3,
        ExprKind::Binary(op, ..) if op.is_relational() => 4,
        ExprKind::Binary(..) => 5,
        ExprKind::Neg(_) => 6,
        _ => 7,
    }
}

fn child(out: &mut String, e: &Expr, min: u8) {
    if level(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Int(i) => {
            let _ = write!(out, "{i}");
        }
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Primed(n) => {
            out.push_str(n);
            out.push('\'');
        }
        ExprKind::Not(x) => {
            out.push('!');
            child(out, x, 3);
        }
        ExprKind::Neg(x) => {
            out.push('-');
            child(out, x, 6);
        }
        ExprKind::Binary(op, l, r) => {
            let lv = level(e);
            // Left-associative operators keep a same-level left operand bare;
            // relations do not chain, so both sides must bind tighter.
            let (lmin, rmin) = if op.is_relational() { (lv + 1, lv + 1) } else { (lv, lv + 1) };
            child(out, l, lmin);
            let _ = write!(out, " {} ", op.symbol());
            child(out, r, rmin);
        }
    }
}

/// Renders an expression with the fewest parentheses that reparse to the
/// same tree.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn names(ns: &[Name]) -> String {
    ns.iter().map(|n| n.text.as_str()).collect::<Vec<_>>().join(", ")
}

/// Renders a model in canonical layout.
pub fn print_model(m: &SourceModel) -> String {
    let mut out = String::new();
    if !m.universe.is_empty() {
        out.push_str("universe\n");
        for d in &m.universe {
            let ty = match &d.ty {
                TypeAst::Bool => "BOOL".to_string(),
                TypeAst::Range(lo, hi) => format!("{lo}..{hi}"),
                TypeAst::Enum(syms) => format!("enum {{ {} }}", names(syms)),
            };
            let _ = writeln!(out, "  {} : {ty}", d.name.text);
        }
        out.push_str("end\n");
    }
    for mach in &m.machines {
        let _ = writeln!(out, "\nmachine {}", mach.name.text);
        if !mach.variables.is_empty() {
            let _ = writeln!(out, "  variables {}", names(&mach.variables));
        }
        if let Some(inv) = &mach.invariant {
            let _ = writeln!(out, "  invariant {}", print_expr(inv));
        }
        if !mach.events.is_empty() {
            out.push_str("  events\n");
        }
        for ev in &mach.events {
            let _ = writeln!(out, "    event {}", ev.name.text);
            if !ev.params.is_empty() {
                let _ = writeln!(out, "      any {}", names(&ev.params));
            }
            if let Some(g) = &ev.guard {
                let _ = writeln!(out, "      where {}", print_expr(g));
            }
            let _ = writeln!(out, "      then {}", print_expr(&ev.action));
            out.push_str("    end\n");
        }
        out.push_str("end\n");
    }
    for init in &m.inits {
        let _ = writeln!(out, "\ninit {}\n  {}\nend", init.machine.text, print_expr(&init.state));
    }
    for split in &m.splits {
        let _ = writeln!(out, "\nsplit {} as {}", split.machine.text, split.plan.text);
        for (b, vs) in &split.blocks {
            let _ = writeln!(out, "  {} : {}", b.text, names(vs));
        }
        out.push_str("end\n");
    }
    out
}
