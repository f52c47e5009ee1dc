use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SurfaceError;

pub const KEYWORDS: &[&str] = &[
    "universe", "machine", "variables", "invariant", "invariants", "events", "event", "any",
    "where", "then", "end", "init", "split", "as", "BOOL", "enum", "true", "false",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SurfaceError>;

impl Parser {
    pub fn new(text: &str) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        Err(SurfaceError::Syntax {
            span: self.span(),
            message: format!("expected {expected}, found {}", self.peek().describe()),
        })
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.error(&tok.describe())
        }
    }

    fn at_name(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !is_keyword(s))
    }

    fn name(&mut self) -> PResult<Name> {
        if self.at_name() {
            let t = self.bump();
            let Tok::Ident(text) = t.tok else { unreachable!() };
            Ok(Name { text, span: t.span })
        } else {
            self.error("a name")
        }
    }

    /// Names separated by optional commas, stopping before a keyword or a
    /// `name :` pair that opens the next block.
    fn name_list(&mut self) -> PResult<Vec<Name>> {
        let mut out = Vec::new();
        while self.at_name() && *self.peek_at(1) != Tok::Colon {
            out.push(self.name()?);
            if !self.eat(&Tok::Comma) && !self.at_name() {
                break;
            }
        }
        Ok(out)
    }

    pub fn finish(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error("end of input")
        }
    }

    pub fn source_model(&mut self) -> PResult<SourceModel> {
        let mut model = SourceModel::default();
        let mut saw_universe = false;
        loop {
            if self.at_keyword("universe") {
                if saw_universe {
                    return Err(SurfaceError::Syntax {
                        span: self.span(),
                        message: "a model has a single universe block".into(),
                    });
                }
                saw_universe = true;
                self.bump();
                model.universe = self.universe_body()?;
            } else if self.eat_keyword("machine") {
                model.machines.push(self.machine()?);
            } else if self.eat_keyword("init") {
                let machine = self.name()?;
                let state = self.expr()?;
                self.expect_keyword("end")?;
                model.inits.push(InitAst { machine, state });
            } else if self.eat_keyword("split") {
                model.splits.push(self.split()?);
            } else if *self.peek() == Tok::Eof {
                return Ok(model);
            } else {
                return self.error("`universe`, `machine`, `init` or `split`");
            }
        }
    }

    fn universe_body(&mut self) -> PResult<Vec<Decl>> {
        let mut decls = Vec::new();
        while !self.eat_keyword("end") {
            let name = self.name()?;
            self.expect(&Tok::Colon)?;
            let ty = self.type_ast()?;
            self.eat(&Tok::Semi);
            decls.push(Decl { name, ty });
        }
        Ok(decls)
    }

    fn signed_int(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => self.error("an integer"),
        }
    }

    fn type_ast(&mut self) -> PResult<TypeAst> {
        if self.eat_keyword("BOOL") {
            return Ok(TypeAst::Bool);
        }
        if self.eat_keyword("enum") {
            self.expect(&Tok::LBrace)?;
            let mut syms = vec![self.name()?];
            while self.eat(&Tok::Comma) {
                syms.push(self.name()?);
            }
            self.expect(&Tok::RBrace)?;
            return Ok(TypeAst::Enum(syms));
        }
        if matches!(self.peek(), Tok::Int(_) | Tok::Minus) {
            let lo = self.signed_int()?;
            self.expect(&Tok::DotDot)?;
            let hi = self.signed_int()?;
            return Ok(TypeAst::Range(lo, hi));
        }
        self.error("a type (`BOOL`, `lo..hi` or `enum { ... }`)")
    }

    fn machine(&mut self) -> PResult<MachineAst> {
        let name = self.name()?;
        let mut variables = Vec::new();
        if self.eat_keyword("variables") {
            variables = self.name_list()?;
        }
        let mut invariant = None;
        if self.eat_keyword("invariant") || self.eat_keyword("invariants") {
            invariant = Some(self.expr()?);
        }
        self.eat_keyword("events");
        let mut events = Vec::new();
        while self.eat_keyword("event") {
            events.push(self.event()?);
        }
        self.expect_keyword("end")?;
        Ok(MachineAst {
            name,
            variables,
            invariant,
            events,
        })
    }

    fn event(&mut self) -> PResult<EventAst> {
        let name = self.name()?;
        let mut params = Vec::new();
        if self.eat_keyword("any") {
            params = self.name_list()?;
        }
        let mut guard = None;
        if self.eat_keyword("where") {
            guard = Some(self.expr()?);
        }
        self.expect_keyword("then")?;
        let action = self.expr()?;
        self.expect_keyword("end")?;
        Ok(EventAst {
            name,
            params,
            guard,
            action,
        })
    }

    fn split(&mut self) -> PResult<SplitAst> {
        let machine = self.name()?;
        self.expect_keyword("as")?;
        let plan = self.name()?;
        let mut blocks = Vec::new();
        while !self.eat_keyword("end") {
            let block = self.name()?;
            self.expect(&Tok::Colon)?;
            let vars = self.name_list()?;
            if vars.is_empty() {
                return self.error("at least one variable");
            }
            blocks.push((block, vars));
        }
        Ok(SplitAst {
            machine,
            plan,
            blocks,
        })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        let span = l.span;
        Expr {
            kind: ExprKind::Binary(op, Box::new(l), Box::new(r)),
            span,
        }
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut l = self.and_expr()?;
        while self.eat(&Tok::Or) {
            let r = self.and_expr()?;
            l = Self::binary(BinOp::Or, l, r);
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut l = self.not_expr()?;
        while self.eat(&Tok::And) {
            let r = self.not_expr()?;
            l = Self::binary(BinOp::And, l, r);
        }
        Ok(l)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        if self.eat(&Tok::Not) {
            let inner = self.not_expr()?;
            return Ok(Expr {
                kind: ExprKind::Not(Box::new(inner)),
                span,
            });
        }
        self.rel_expr()
    }

    fn rel_expr(&mut self) -> PResult<Expr> {
        let l = self.add_expr()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(l),
        };
        self.bump();
        let r = self.add_expr()?;
        Ok(Self::binary(op, l, r))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut l = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.unary_expr()?;
            l = Self::binary(op, l, r);
        }
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        if self.eat(&Tok::Minus) {
            let inner = self.unary_expr()?;
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::Int(v)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                ExprKind::Bool(s == "true")
            }
            Tok::Ident(_) if self.at_name() => {
                let n = self.name()?;
                if self.eat(&Tok::Prime) {
                    ExprKind::Primed(n.text)
                } else {
                    ExprKind::Name(n.text)
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(&Tok::RParen)?;
                return Ok(inner);
            }
            _ => return self.error("an expression"),
        };
        Ok(Expr { kind, span })
    }
}

/// Parses a whole model without name resolution.
pub fn parse_syntax(text: &str) -> PResult<SourceModel> {
    let mut p = Parser::new(text)?;
    let model = p.source_model()?;
    p.finish()?;
    Ok(model)
}

/// Parses a single expression without name resolution.
pub fn parse_expr_syntax(text: &str) -> PResult<Expr> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}
