use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use super::ast::*;
use super::check::{check, Ctx, Env};
use super::parser::parse_expr_syntax;
use super::SurfaceError;
use crate::dynamics::ScriptStep;
use crate::kernel::{Domain, Ident, Predicate, Role, Universe, Valuation, Value};
use crate::model::{check_static, EventDef, Machine, Project, Rule, Violation};
use crate::transform::SplitPlan;

pub const DEFAULT_CELL_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    /// Largest number of valuations any single formula may be enumerated over.
    pub cell_budget: u64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }
}

/// A static-rule violation tied back to the formula that caused it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocatedViolation {
    #[serde(flatten)]
    pub violation: Violation,
    pub line: usize,
    pub column: usize,
}

/// The semantic objects built from a source model.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub source: SourceModel,
    pub project: Project,
    pub inits: BTreeMap<String, Predicate>,
    pub plans: BTreeMap<String, SplitPlan>,
    options: CompileOptions,
    env: Env,
}

struct Evaluator<'a> {
    universe: &'a Universe,
    hull: Option<(i64, i64)>,
}

impl Evaluator<'_> {
    fn arith(&self, v: i64) -> Option<Value> {
        match self.hull {
            Some((lo, hi)) if lo <= v && v <= hi => Some(Value::Int(v)),
            _ => None,
        }
    }

    /// Value of a term; `None` when arithmetic leaves the integer hull.
    fn term(&self, e: &Expr, v: &Valuation) -> Option<Value> {
        match &e.kind {
            ExprKind::Bool(b) => Some(Value::Bool(*b)),
            ExprKind::Int(i) => Some(Value::Int(*i)),
            ExprKind::Name(n) => match self.universe.ident(n) {
                Ok(ident) => v.get(&ident).cloned(),
                Err(_) => Some(Value::Sym(n.clone())),
            },
            ExprKind::Primed(n) => v.get(&Ident::var(n).prime().ok()?).cloned(),
            ExprKind::Neg(x) => match &x.kind {
                ExprKind::Int(i) => Some(Value::Int(-i)),
                _ => match self.term(x, v)? {
                    Value::Int(i) => self.arith(-i),
                    _ => None,
                },
            },
            ExprKind::Binary(op @ (BinOp::Add | BinOp::Sub), l, r) => {
                let (Value::Int(a), Value::Int(b)) = (self.term(l, v)?, self.term(r, v)?) else {
                    return None;
                };
                self.arith(if *op == BinOp::Add { a + b } else { a - b })
            }
            _ => Some(Value::Bool(self.holds(e, v))),
        }
    }

    fn holds(&self, e: &Expr, v: &Valuation) -> bool {
        match &e.kind {
            ExprKind::Bool(b) => *b,
            ExprKind::Not(x) => !self.holds(x, v),
            ExprKind::Binary(BinOp::And, l, r) => self.holds(l, v) && self.holds(r, v),
            ExprKind::Binary(BinOp::Or, l, r) => self.holds(l, v) || self.holds(r, v),
            ExprKind::Binary(op, l, r) if op.is_relational() => {
                let (Some(a), Some(b)) = (self.term(l, v), self.term(r, v)) else {
                    return false;
                };
                match (op, a, b) {
                    (BinOp::Eq, a, b) => a == b,
                    (BinOp::Ne, a, b) => a != b,
                    (BinOp::Lt, Value::Int(a), Value::Int(b)) => a < b,
                    (BinOp::Le, Value::Int(a), Value::Int(b)) => a <= b,
                    (BinOp::Gt, Value::Int(a), Value::Int(b)) => a > b,
                    (BinOp::Ge, Value::Int(a), Value::Int(b)) => a >= b,
                    _ => false,
                }
            }
            _ => self.term(e, v) == Some(Value::Bool(true)),
        }
    }
}

/// Identifiers an expression mentions syntactically.
fn mentioned(universe: &Universe, e: &Expr) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    e.walk(&mut |x| match &x.kind {
        ExprKind::Name(n) => {
            if let Ok(i) = universe.ident(n) {
                out.insert(i);
            }
        }
        ExprKind::Primed(n) => {
            if let Ok(i) = Ident::var(n).prime() {
                out.insert(i);
            }
        }
        _ => {}
    });
    out
}

fn formula(universe: &Arc<Universe>, e: &Expr, budget: u64) -> Result<Predicate, SurfaceError> {
    let scope = mentioned(universe, e);
    let cells = Predicate::cell_count(universe, &scope)?;
    if cells > budget {
        return Err(SurfaceError::DomainTooLarge {
            span: e.span,
            cells,
            budget,
        });
    }
    let ev = Evaluator {
        universe,
        hull: universe.int_hull(),
    };
    Ok(Predicate::from_fn(universe, scope, |v| ev.holds(e, v))?)
}

fn optional(universe: &Arc<Universe>, e: Option<&Expr>, budget: u64) -> Result<Predicate, SurfaceError> {
    match e {
        Some(e) => formula(universe, e, budget),
        None => Ok(Predicate::truth(universe)),
    }
}

fn build_universe(model: &SourceModel, env: &Env) -> Result<Universe, SurfaceError> {
    let mut u = Universe::new();
    for d in &model.universe {
        let domain = match &d.ty {
            TypeAst::Bool => Domain::boolean(),
            TypeAst::Range(lo, hi) => Domain::range(*lo, *hi)?,
            TypeAst::Enum(syms) => Domain::enumeration(syms.iter().map(|s| s.text.clone()))?,
        };
        let role = if env.params.contains(&d.name.text) { Role::Param } else { Role::Var };
        u.declare(d.name.text.clone(), role, domain)?;
    }
    Ok(u)
}

fn locate(model: &SourceModel, v: &Violation) -> Span {
    let Some(m) = model.machines.iter().find(|m| m.name.text == v.machine) else {
        return Span::default();
    };
    let ev = v
        .event
        .as_ref()
        .and_then(|e| m.events.iter().find(|x| &x.name.text == e));
    match (v.rule, ev) {
        (Rule::InvariantScope, _) => m.invariant.as_ref().map_or(m.name.span, |e| e.span),
        (Rule::GuardScope, Some(ev)) => ev.guard.as_ref().map_or(ev.name.span, |e| e.span),
        (Rule::ActionScope, Some(ev)) => ev.action.span,
        (_, None) => m.name.span,
    }
}

/// Builds the project, initial states and split plans of a model.
///
/// Fails on the first unresolved name or ill-typed formula, on any formula
/// whose enumeration exceeds the cell budget, and with every static-rule
/// violation (with positions) when a machine is not well formed.
pub fn compile(model: &SourceModel, options: CompileOptions) -> Result<Compiled, SurfaceError> {
    let env = check(model)?;
    let universe = Arc::new(build_universe(model, &env)?);
    let budget = options.cell_budget;
    let mut machines = Vec::new();
    for m in &model.machines {
        let vars: Vec<Ident> = m.variables.iter().map(|v| Ident::var(&v.text)).collect();
        let inv = optional(&universe, m.invariant.as_ref(), budget)?;
        let mut events = Vec::new();
        for ev in &m.events {
            let pars = ev.params.iter().map(|p| Ident::param(&p.text));
            let guard = optional(&universe, ev.guard.as_ref(), budget)?;
            let action = formula(&universe, &ev.action, budget)?;
            events.push((ev.name.text.clone(), EventDef::new(pars, guard, action)?));
        }
        machines.push(Machine::new(m.name.text.clone(), vars, inv, events)?);
    }
    let project = Project::from_machines(universe.clone(), machines)?;
    let report = check_static(&project);
    if !report.is_well_formed() {
        let located = report
            .violations
            .into_iter()
            .map(|v| {
                let span = locate(model, &v);
                LocatedViolation {
                    violation: v,
                    line: span.line,
                    column: span.column,
                }
            })
            .collect();
        return Err(SurfaceError::StaticViolation(located));
    }
    let mut inits = BTreeMap::new();
    for init in &model.inits {
        inits.insert(init.machine.text.clone(), formula(&universe, &init.state, budget)?);
    }
    let plans = model
        .splits
        .iter()
        .map(|s| {
            let blocks = s
                .blocks
                .iter()
                .map(|(b, vs)| (b.text.clone(), vs.iter().map(|v| Ident::var(&v.text)).collect()));
            (s.plan.text.clone(), SplitPlan::new(s.machine.text.clone(), blocks))
        })
        .collect();
    Ok(Compiled {
        source: model.clone(),
        project,
        inits,
        plans,
        options,
        env,
    })
}

fn shift(err: SurfaceError, line: usize, column: usize) -> SurfaceError {
    let fix = |s: Span| Span {
        line: line + s.line - 1,
        column: if s.line == 1 { column + s.column - 1 } else { s.column },
    };
    match err {
        SurfaceError::Syntax { span, message } => SurfaceError::Syntax { span: fix(span), message },
        SurfaceError::Name { span, message } => SurfaceError::Name { span: fix(span), message },
        SurfaceError::Kind { span, message } => SurfaceError::Kind { span: fix(span), message },
        SurfaceError::Type { span, message } => SurfaceError::Type { span: fix(span), message },
        SurfaceError::DomainTooLarge { span, cells, budget } => SurfaceError::DomainTooLarge {
            span: fix(span),
            cells,
            budget,
        },
        other => other,
    }
}

impl Compiled {
    pub fn universe(&self) -> &Arc<Universe> {
        self.project.universe()
    }

    fn standalone(&self, text: &str, ctx: Ctx<'_>) -> Result<Predicate, SurfaceError> {
        let e = parse_expr_syntax(text)?;
        self.env.check_formula(&e, ctx)?;
        formula(self.universe(), &e, self.options.cell_budget)
    }

    /// Compiles a state formula over variables, e.g. an activation state.
    pub fn state_formula(&self, text: &str) -> Result<Predicate, SurfaceError> {
        self.standalone(text, Ctx::State)
    }

    /// Compiles a formula over the parameters of `machine.event`.
    pub fn param_formula(&self, machine: &str, event: &str, text: &str) -> Result<Predicate, SurfaceError> {
        let ev = self
            .source
            .machines
            .iter()
            .find(|m| m.name.text == machine)
            .and_then(|m| m.events.iter().find(|e| e.name.text == event))
            .ok_or_else(|| SurfaceError::Name {
                span: Span { line: 1, column: 1 },
                message: format!("unknown event `{machine}.{event}`"),
            })?;
        let ps: BTreeSet<String> = ev.params.iter().map(|p| p.text.clone()).collect();
        self.standalone(text, Ctx::Guard(&ps))
    }

    /// Reads a script: one `Machine event [parameter-formula]` per line,
    /// blank lines and `//` comments ignored.
    pub fn parse_script(&self, text: &str) -> Result<Vec<ScriptStep>, SurfaceError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split("//").next().unwrap_or("");
            let mut words = body.split_whitespace();
            let Some(machine) = words.next() else { continue };
            let column = |w: &str| w.as_ptr() as usize - raw.as_ptr() as usize + 1;
            let unknown = |what: String, col: usize| SurfaceError::Name {
                span: Span { line, column: col },
                message: what,
            };
            let Some(event) = words.next() else {
                return Err(SurfaceError::Syntax {
                    span: Span { line, column: column(machine) + machine.len() },
                    message: "expected an event name".into(),
                });
            };
            if !self.project.contains(machine) {
                return Err(unknown(format!("unknown machine `{machine}`"), column(machine)));
            }
            if self.project.get_machine(machine)?.event(event).is_none() {
                return Err(unknown(format!("unknown event `{machine}.{event}`"), column(event)));
            }
            let rest_start = column(event) + event.len() - 1;
            let rest = &body[rest_start..];
            let params = if rest.trim().is_empty() {
                Predicate::truth(self.universe())
            } else {
                self.param_formula(machine, event, rest)
                    .map_err(|e| shift(e, line, rest_start + 1))?
            };
            steps.push(ScriptStep {
                machine: machine.to_string(),
                event: event.to_string(),
                params,
            });
        }
        Ok(steps)
    }
}
