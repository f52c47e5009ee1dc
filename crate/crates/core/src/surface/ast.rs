use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Name {
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeAst {
    Bool,
    Range(i64, i64),
    Enum(Vec<Name>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub name: Name,
    pub ty: TypeAst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Or => "|",
            BinOp::And => "&",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }

    pub fn is_relational(&self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Bool(bool),
    Int(i64),
    Name(String),
    Primed(String),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    /// Pre-order walk over every sub-expression.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Not(e) | ExprKind::Neg(e) => e.walk(f),
            ExprKind::Binary(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventAst {
    pub name: Name,
    pub params: Vec<Name>,
    pub guard: Option<Expr>,
    pub action: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineAst {
    pub name: Name,
    pub variables: Vec<Name>,
    pub invariant: Option<Expr>,
    pub events: Vec<EventAst>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitAst {
    pub machine: Name,
    pub state: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAst {
    pub machine: Name,
    pub plan: Name,
    pub blocks: Vec<(Name, Vec<Name>)>,
}

/// A parsed `.ebm` file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceModel {
    pub universe: Vec<Decl>,
    pub machines: Vec<MachineAst>,
    pub inits: Vec<InitAst>,
    pub splits: Vec<SplitAst>,
}

fn erase_name(n: &mut Name) {
    n.span = Span::default();
}

fn erase_expr(e: &mut Expr) {
    e.span = Span::default();
    match &mut e.kind {
        ExprKind::Not(x) | ExprKind::Neg(x) => erase_expr(x),
        ExprKind::Binary(_, l, r) => {
            erase_expr(l);
            erase_expr(r);
        }
        _ => {}
    }
}

impl SourceModel {
    /// The same tree with every position reset, for structural comparison.
    pub fn without_spans(&self) -> SourceModel {
        let mut m = self.clone();
        for d in &mut m.universe {
            erase_name(&mut d.name);
            if let TypeAst::Enum(syms) = &mut d.ty {
                syms.iter_mut().for_each(erase_name);
            }
        }
        for mach in &mut m.machines {
            erase_name(&mut mach.name);
            mach.variables.iter_mut().for_each(erase_name);
            if let Some(inv) = &mut mach.invariant {
                erase_expr(inv);
            }
            for ev in &mut mach.events {
                erase_name(&mut ev.name);
                ev.params.iter_mut().for_each(erase_name);
                if let Some(g) = &mut ev.guard {
                    erase_expr(g);
                }
                erase_expr(&mut ev.action);
            }
        }
        for init in &mut m.inits {
            erase_name(&mut init.machine);
            erase_expr(&mut init.state);
        }
        for split in &mut m.splits {
            erase_name(&mut split.machine);
            erase_name(&mut split.plan);
            for (n, vs) in &mut split.blocks {
                erase_name(n);
                vs.iter_mut().for_each(erase_name);
            }
        }
        m
    }
}
