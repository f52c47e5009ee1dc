use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::SurfaceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ty {
    Bool,
    Int,
    Sym,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Bool => "boolean",
            Ty::Int => "integer",
            Ty::Sym => "enumeration",
        }
    }
}

/// Where an expression occurs; decides which names it may mention.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Ctx<'a> {
    Invariant,
    State,
    Guard(&'a BTreeSet<String>),
    Action(&'a BTreeSet<String>),
}

/// Declared names, their types, and which of them act as parameters.
#[derive(Debug, Clone)]
pub(crate) struct Env {
    pub types: BTreeMap<String, Ty>,
    pub params: BTreeSet<String>,
    pub symbols: BTreeSet<String>,
}

fn name_error<T>(span: Span, message: String) -> Result<T, SurfaceError> {
    Err(SurfaceError::Name { span, message })
}

fn kind_error<T>(span: Span, message: String) -> Result<T, SurfaceError> {
    Err(SurfaceError::Kind { span, message })
}

fn type_error<T>(span: Span, message: String) -> Result<T, SurfaceError> {
    Err(SurfaceError::Type { span, message })
}

fn unique<'a>(names: impl IntoIterator<Item = &'a Name>, what: &str) -> Result<(), SurfaceError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n.text.as_str()) {
            return name_error(n.span, format!("duplicate {what} `{}`", n.text));
        }
    }
    Ok(())
}

impl Env {
    pub fn build(model: &SourceModel) -> Result<Env, SurfaceError> {
        unique(model.universe.iter().map(|d| &d.name), "declaration")?;
        let mut types = BTreeMap::new();
        let mut symbols = BTreeSet::new();
        for d in &model.universe {
            let ty = match &d.ty {
                TypeAst::Bool => Ty::Bool,
                TypeAst::Range(lo, hi) => {
                    if lo > hi {
                        return type_error(d.name.span, format!("empty range {lo}..{hi} for `{}`", d.name.text));
                    }
                    Ty::Int
                }
                TypeAst::Enum(syms) => {
                    unique(syms, "enumeration symbol")?;
                    symbols.extend(syms.iter().map(|s| s.text.clone()));
                    Ty::Sym
                }
            };
            types.insert(d.name.text.clone(), ty);
        }
        for d in &model.universe {
            if let TypeAst::Enum(syms) = &d.ty {
                if let Some(s) = syms.iter().find(|s| types.contains_key(&s.text)) {
                    return name_error(s.span, format!("symbol `{}` clashes with a declared name", s.text));
                }
            }
        }
        let mut params = BTreeSet::new();
        for ev in model.machines.iter().flat_map(|m| &m.events) {
            for p in &ev.params {
                if !types.contains_key(&p.text) {
                    return name_error(p.span, format!("undeclared parameter `{}`", p.text));
                }
                params.insert(p.text.clone());
            }
        }
        Ok(Env { types, params, symbols })
    }

    fn declared(&self, n: &Name) -> Result<(), SurfaceError> {
        if self.types.contains_key(&n.text) {
            Ok(())
        } else {
            name_error(n.span, format!("undeclared identifier `{}`", n.text))
        }
    }

    pub fn check_variable(&self, n: &Name) -> Result<(), SurfaceError> {
        self.declared(n)?;
        if self.params.contains(&n.text) {
            return kind_error(n.span, format!("`{}` is used both as a variable and as a parameter", n.text));
        }
        Ok(())
    }

    pub fn check_formula(&self, e: &Expr, ctx: Ctx<'_>) -> Result<(), SurfaceError> {
        let ty = self.type_of(e, ctx)?;
        if ty != Ty::Bool {
            return type_error(e.span, format!("expected a boolean formula, found an {} term", ty.name()));
        }
        Ok(())
    }

    fn type_of(&self, e: &Expr, ctx: Ctx<'_>) -> Result<Ty, SurfaceError> {
        let expect = |x: &Expr, want: Ty| -> Result<(), SurfaceError> {
            let got = self.type_of(x, ctx)?;
            if got != want {
                return type_error(x.span, format!("expected an {} term, found an {} term", want.name(), got.name()));
            }
            Ok(())
        };
        match &e.kind {
            ExprKind::Bool(_) => Ok(Ty::Bool),
            ExprKind::Int(_) => Ok(Ty::Int),
            ExprKind::Name(n) => match self.types.get(n) {
                Some(&ty) => {
                    if self.params.contains(n) {
                        let bound = match ctx {
                            Ctx::Guard(ps) | Ctx::Action(ps) => ps.contains(n),
                            Ctx::Invariant | Ctx::State => false,
                        };
                        if !bound {
                            return name_error(e.span, format!("parameter `{n}` is not bound here"));
                        }
                    }
                    Ok(ty)
                }
                None if self.symbols.contains(n) => Ok(Ty::Sym),
                None => name_error(e.span, format!("undeclared identifier `{n}`")),
            },
            ExprKind::Primed(n) => {
                if !matches!(ctx, Ctx::Action(_)) {
                    return kind_error(e.span, format!("primed `{n}'` is only allowed in actions"));
                }
                match self.types.get(n) {
                    None => name_error(e.span, format!("undeclared identifier `{n}`")),
                    Some(_) if self.params.contains(n) => {
                        kind_error(e.span, format!("parameter `{n}` cannot be primed"))
                    }
                    Some(&ty) => Ok(ty),
                }
            }
            ExprKind::Not(x) => {
                expect(x, Ty::Bool)?;
                Ok(Ty::Bool)
            }
            ExprKind::Neg(x) => {
                expect(x, Ty::Int)?;
                Ok(Ty::Int)
            }
            ExprKind::Binary(op, l, r) => match op {
                BinOp::And | BinOp::Or => {
                    expect(l, Ty::Bool)?;
                    expect(r, Ty::Bool)?;
                    Ok(Ty::Bool)
                }
                BinOp::Add | BinOp::Sub => {
                    expect(l, Ty::Int)?;
                    expect(r, Ty::Int)?;
                    Ok(Ty::Int)
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    expect(l, Ty::Int)?;
                    expect(r, Ty::Int)?;
                    Ok(Ty::Bool)
                }
                BinOp::Eq | BinOp::Ne => {
                    let lt = self.type_of(l, ctx)?;
                    expect(r, lt)?;
                    Ok(Ty::Bool)
                }
            },
        }
    }
}

/// Resolves every name in `model` and type-checks every formula.
pub(crate) fn check(model: &SourceModel) -> Result<Env, SurfaceError> {
    let env = Env::build(model)?;
    unique(model.machines.iter().map(|m| &m.name), "machine")?;
    for m in &model.machines {
        unique(&m.variables, "variable")?;
        for v in &m.variables {
            env.check_variable(v)?;
        }
        if let Some(inv) = &m.invariant {
            env.check_formula(inv, Ctx::Invariant)?;
        }
        unique(m.events.iter().map(|e| &e.name), "event")?;
        for ev in &m.events {
            unique(&ev.params, "parameter")?;
            let ps: BTreeSet<String> = ev.params.iter().map(|p| p.text.clone()).collect();
            if let Some(g) = &ev.guard {
                env.check_formula(g, Ctx::Guard(&ps))?;
            }
            env.check_formula(&ev.action, Ctx::Action(&ps))?;
        }
    }
    let machines: BTreeSet<&str> = model.machines.iter().map(|m| m.name.text.as_str()).collect();
    let known = |n: &Name| {
        if machines.contains(n.text.as_str()) {
            Ok(())
        } else {
            name_error(n.span, format!("unknown machine `{}`", n.text))
        }
    };
    unique(model.inits.iter().map(|i| &i.machine), "init block for")?;
    for init in &model.inits {
        known(&init.machine)?;
        env.check_formula(&init.state, Ctx::State)?;
    }
    unique(model.splits.iter().map(|s| &s.plan), "split plan")?;
    for split in &model.splits {
        known(&split.machine)?;
        unique(split.blocks.iter().map(|(b, _)| b), "block")?;
        for v in split.blocks.iter().flat_map(|(_, vs)| vs) {
            env.check_variable(v)?;
        }
    }
    Ok(env)
}
