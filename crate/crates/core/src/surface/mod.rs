//! The `.ebm` text format: lexer, parser, name resolution, pretty-printer
//! and compiler to kernel predicates.
//!
//! ```text
//! universe
//!   x : 0..3
//!   q : 0..1
//! end
//! machine Counter
//!   variables x
//!   invariant x <= 3
//!   events
//!     event inc any q where x + q <= 3 then x' = x + q end
//! end
//! init Counter x = 0 end
//! ```
//!
//! A declared name is a parameter when it appears in some `any` clause and a
//! variable otherwise. Arithmetic whose result leaves the integer hull of the
//! universe makes the enclosing atom false.

mod ast;
mod check;
mod compile;
mod lexer;
mod parser;
mod print;

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

pub use ast::*;
pub use compile::{compile, CompileOptions, Compiled, LocatedViolation, DEFAULT_CELL_BUDGET};
pub use parser::{is_keyword, KEYWORDS};
pub use print::{print_expr, print_model};

use crate::kernel::{KernelError, Predicate, Universe};
use crate::model::{Machine, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurfaceError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },

    #[error("{span}: name error: {message}")]
    Name { span: Span, message: String },

    #[error("{span}: kind error: {message}")]
    Kind { span: Span, message: String },

    #[error("{span}: type error: {message}")]
    Type { span: Span, message: String },

    #[error("{span}: formula ranges over {cells} valuations, above the budget of {budget}")]
    DomainTooLarge { span: Span, cells: u64, budget: u64 },

    #[error("{} static violation(s): {}", .0.len(), render_violations(.0))]
    StaticViolation(Vec<LocatedViolation>),

    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error(transparent)]
    Model(#[from] ModelError),
}

fn render_violations(vs: &[LocatedViolation]) -> String {
    vs.iter()
        .map(|v| format!("{}:{}: {}", v.line, v.column, v.violation))
        .collect::<Vec<_>>()
        .join("; ")
}

impl SurfaceError {
    /// Stable machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            SurfaceError::Syntax { .. } => "SyntaxError",
            SurfaceError::Name { .. } => "NameError",
            SurfaceError::Kind { .. } => "KindError",
            SurfaceError::Type { .. } => "TypeError",
            SurfaceError::DomainTooLarge { .. } => "DomainTooLarge",
            SurfaceError::StaticViolation(_) => "StaticViolation",
            SurfaceError::Kernel(_) => "KernelError",
            SurfaceError::Model(_) => "ModelError",
        }
    }

    pub fn span(&self) -> Option<Span> {
        match self {
            SurfaceError::Syntax { span, .. }
            | SurfaceError::Name { span, .. }
            | SurfaceError::Kind { span, .. }
            | SurfaceError::Type { span, .. }
            | SurfaceError::DomainTooLarge { span, .. } => Some(*span),
            _ => None,
        }
    }
}

/// Parses and resolves a model.
pub fn parse(text: &str) -> Result<SourceModel, SurfaceError> {
    let model = parser::parse_syntax(text)?;
    check::check(&model)?;
    Ok(model)
}

/// Parses a single expression; names are resolved only when it is compiled.
pub fn parse_expr(text: &str) -> Result<Expr, SurfaceError> {
    parser::parse_expr_syntax(text)
}

/// Parses, resolves and compiles a model in one go.
pub fn load(text: &str, options: CompileOptions) -> Result<Compiled, SurfaceError> {
    compile(&parse(text)?, options)
}

/// Renders machines (and optional initial states) back to `.ebm` text, with
/// every formula printed in conjunct form.
pub fn emit(universe: &Universe, machines: &[Machine], inits: &BTreeMap<String, Predicate>) -> String {
    let mut out = String::from("universe\n");
    for (name, decl) in universe.declarations() {
        let _ = writeln!(out, "  {name} : {}", decl.domain);
    }
    out.push_str("end\n");
    for m in machines {
        let _ = writeln!(out, "\nmachine {}", m.name());
        if !m.vars().is_empty() {
            let vars: Vec<String> = m.vars().iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "  variables {}", vars.join(", "));
        }
        let _ = writeln!(out, "  invariant {}", m.inv());
        if !m.events().is_empty() {
            out.push_str("  events\n");
        }
        for (name, ev) in m.events() {
            let _ = writeln!(out, "    event {name}");
            if !ev.pars().is_empty() {
                let pars: Vec<String> = ev.pars().iter().map(ToString::to_string).collect();
                let _ = writeln!(out, "      any {}", pars.join(", "));
            }
            let _ = writeln!(out, "      where {}", ev.guard());
            let _ = writeln!(out, "      then {}", ev.action());
            out.push_str("    end\n");
        }
        out.push_str("end\n");
    }
    for (name, state) in inits {
        let _ = writeln!(out, "\ninit {name}\n  {state}\nend");
    }
    out
}
