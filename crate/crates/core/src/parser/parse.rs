//! Recursive-descent parser producing unresolved classes.
//!
//! Usage terms come out with where-names and shorthand object types left
//! as free variables; [`super::resolve`] expands them.

use crate::ast::{
    BinOp, Expr, ExprKind, FieldDecl, MethodDecl, Owner, Param, Place, Receiver, Span, Type, Value,
};
use crate::diagnostics::{codes, Diagnostic};
use crate::usage::{Qualifier, Usage};

use super::lexer::{Keyword, Tok, Token};

/// Free variable standing for "the declared initial usage of the class"
/// in shorthand object types such as `Auction a;`.
pub const INITIAL_USAGE: &str = "@init";

#[derive(Clone, Debug)]
pub struct RawClass {
    pub name: String,
    pub span: Span,
    pub usage: Option<(Usage, Span)>,
    pub bindings: Vec<(String, Usage, Span)>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
}

type PResult<T> = Result<T, Diagnostic>;

pub struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    pub diags: Vec<Diagnostic>,
}

impl Parser {
    pub fn new(tokens: Vec<Token>) -> Parser {
        Parser {
            tokens,
            pos: 0,
            diags: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        self.peek_at(0)
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos.min(self.tokens.len() - 1)].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn prev_tok(&self) -> Option<&Tok> {
        self.pos.checked_sub(1).map(|i| &self.tokens[i].tok)
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_kw(&self, k: Keyword) -> bool {
        *self.peek() == Tok::Kw(k)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::error(codes::PARSE, self.span(), msg))
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<Span> {
        if self.at(&t) {
            let s = self.span();
            self.advance();
            Ok(s)
        } else {
            self.err(format!("expected {what}, found {}", self.peek()))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.span();
                self.advance();
                Ok((s, sp))
            }
            other => self.err(format!("expected {what}, found {other}")),
        }
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if self.at(&Tok::Eof) {
            Ok(())
        } else {
            self.err(format!("unexpected {} after the end of input", self.peek()))
        }
    }

    /// A statement list as found inside a block, up to end of input.
    pub fn expr_list(&mut self) -> PResult<Expr> {
        let start = self.span();
        self.statements(start)
    }

    // ---------------------------------------------------------------- program

    pub fn program(&mut self) -> Vec<RawClass> {
        let mut classes = Vec::new();
        while !self.at(&Tok::Eof) {
            if self.at_kw(Keyword::Class) {
                match self.class() {
                    Ok(c) => classes.push(c),
                    Err(d) => {
                        self.diags.push(d);
                        self.skip_to_next_class();
                    }
                }
            } else {
                let d = Diagnostic::error(
                    codes::PARSE,
                    self.span(),
                    format!("expected `class`, found {}", self.peek()),
                );
                self.diags.push(d);
                self.skip_to_next_class();
            }
        }
        classes
    }

    fn skip_to_next_class(&mut self) {
        self.advance();
        while !self.at(&Tok::Eof) && !self.at_kw(Keyword::Class) {
            self.advance();
        }
    }

    fn class(&mut self) -> PResult<RawClass> {
        let start = self.span();
        self.advance();
        let (name, _) = self.ident("class name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut class = RawClass {
            name,
            span: start,
            usage: None,
            bindings: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
        };
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.advance();
                    break;
                }
                Tok::Eof => return self.err("unexpected end of input inside class body"),
                _ => {
                    let member_start = self.pos;
                    if let Err(d) = self.member(&mut class) {
                        self.diags.push(d);
                        self.recover_member(member_start);
                    }
                }
            }
        }
        class.span = start.to(self.prev_span());
        Ok(class)
    }

    /// Skips the rest of a malformed member: up to a `;` or a closing brace
    /// at the member's own nesting level.
    fn recover_member(&mut self, member_start: usize) {
        self.pos = member_start;
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::LBrace => depth += 1,
                Tok::RBrace if depth == 0 => return,
                Tok::RBrace => {
                    depth -= 1;
                    if depth == 0 {
                        self.advance();
                        self.eat(&Tok::Semi);
                        return;
                    }
                }
                Tok::Semi if depth == 0 => {
                    self.advance();
                    return;
                }
                _ => {}
            }
            self.advance();
        }
    }

    fn member(&mut self, class: &mut RawClass) -> PResult<()> {
        if self.at_kw(Keyword::Usage) {
            let start = self.span();
            self.advance();
            if class.usage.is_some() {
                return Err(Diagnostic::error(
                    codes::DUPLICATE,
                    start,
                    format!("class {} declares more than one usage", class.name),
                ));
            }
            let u = self.usage(Qualifier::Un, true)?;
            let uspan = start.to(self.prev_span());
            while self.at_kw(Keyword::Where) || (self.at(&Tok::Comma) && !class.bindings.is_empty())
            {
                self.advance();
                let (n, nspan) = self.ident("usage name")?;
                self.expect(Tok::Assign, "`=`")?;
                let body = self.usage(Qualifier::Un, true)?;
                class.bindings.push((n, body, nspan.to(self.prev_span())));
            }
            if !self.eat(&Tok::Semi) && !self.at(&Tok::RBrace) {
                return self.err(format!("expected `;` after usage, found {}", self.peek()));
            }
            class.usage = Some((u, uspan));
            return Ok(());
        }
        let start = self.span();
        let sync = self.at_kw(Keyword::Sync);
        if sync {
            self.advance();
        }
        let ty = self.ty()?;
        let (name, _) = self.ident("field or method name")?;
        if self.at(&Tok::LParen) {
            let params = self.params()?;
            let body = self.block()?;
            class.methods.push(MethodDecl {
                sync,
                ret: ty,
                name,
                params,
                body,
                span: start.to(self.prev_span()),
            });
            Ok(())
        } else if sync {
            self.err("`sync` applies to methods only")
        } else {
            self.expect(Tok::Semi, "`;` after field declaration")?;
            class.fields.push(FieldDecl {
                name,
                ty,
                span: start.to(self.prev_span()),
            });
            Ok(())
        }
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                let start = self.span();
                let ty = self.ty()?;
                let (name, _) = self.ident("parameter name")?;
                params.push(Param {
                    name,
                    ty,
                    span: start.to(self.prev_span()),
                });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(params)
    }

    pub fn ty(&mut self) -> PResult<Type> {
        let t = match self.peek().clone() {
            Tok::Kw(Keyword::Unit) => Type::Unit,
            Tok::Kw(Keyword::Boolean) => Type::Boolean,
            Tok::Kw(Keyword::Int) => Type::Int,
            Tok::Kw(Keyword::String) => Type::Str,
            Tok::Ident(c) => {
                self.advance();
                if self.eat(&Tok::LBracket) {
                    let u = self.usage(Qualifier::Un, false)?;
                    self.expect(Tok::RBracket, "`]`")?;
                    return Ok(Type::Object(c, u));
                }
                return Ok(Type::Object(c, Usage::var(INITIAL_USAGE)));
            }
            other => return self.err(format!("expected a type, found {other}")),
        };
        self.advance();
        Ok(t)
    }

    // ------------------------------------------------------------------ usage

    fn qualifier(&mut self) -> Option<Qualifier> {
        match self.peek() {
            Tok::Kw(Keyword::Lin) => {
                self.advance();
                Some(Qualifier::Lin)
            }
            Tok::Kw(Keyword::Un) => {
                self.advance();
                Some(Qualifier::Un)
            }
            _ => None,
        }
    }

    /// Whether the token `k` positions ahead begins another usage term. Only
    /// consulted at clause level, where `;` may also end the clause.
    fn usage_starts_at(&self, k: usize) -> bool {
        match self.peek_at(k) {
            Tok::Kw(Keyword::Lin | Keyword::Un | Keyword::End | Keyword::Mu)
            | Tok::Star
            | Tok::LBrace
            | Tok::VariantOpen => true,
            Tok::Ident(_) => !matches!(self.peek_at(k + 1), Tok::Ident(_) | Tok::LBracket),
            _ => false,
        }
    }

    /// Parses a usage term. `dq` is the qualifier given to unqualified
    /// branches (`lin` inside variants); `top` marks clause level.
    pub fn usage(&mut self, dq: Qualifier, top: bool) -> PResult<Usage> {
        let q = self.qualifier();
        match self.peek().clone() {
            Tok::Ident(label) => {
                if *self.peek_at(1) == Tok::Semi && (!top || self.usage_starts_at(2)) {
                    self.advance();
                    self.advance();
                    let cont = self.usage(dq, top)?;
                    return Ok(Usage::Branch(q.unwrap_or(dq), vec![(label, cont)]));
                }
                self.advance();
                Ok(match q {
                    Some(q) => Usage::Branch(q, vec![(label, Usage::end())]),
                    None => Usage::Var(label),
                })
            }
            Tok::LBrace => {
                let open = self.span();
                let choices = self.choices(dq)?;
                let shared = if self.at(&Tok::Semi) && (!top || self.usage_starts_at(1)) {
                    self.advance();
                    Some(self.usage(dq, top)?)
                } else {
                    None
                };
                let mut entries: Vec<(String, Usage)> = Vec::new();
                for (label, cont) in choices {
                    if entries.iter().any(|(l, _)| *l == label) {
                        return Err(Diagnostic::error(
                            codes::DUPLICATE,
                            open,
                            format!("label `{label}` occurs twice in one branch"),
                        ));
                    }
                    let cont = cont.or_else(|| shared.clone()).unwrap_or_else(Usage::end);
                    entries.push((label, cont));
                }
                Ok(Usage::Branch(q.unwrap_or(dq), entries))
            }
            _ if q.is_some() => self.err(format!(
                "expected a method label or `{{` after qualifier, found {}",
                self.peek()
            )),
            Tok::Kw(Keyword::End) => {
                self.advance();
                Ok(Usage::end())
            }
            Tok::Star => {
                self.advance();
                self.expect(Tok::LBrace, "`{` after `*`")?;
                let mut labels = Vec::new();
                if !self.at(&Tok::RBrace) {
                    loop {
                        let (l, sp) = self.ident("method label")?;
                        if labels.contains(&l) {
                            return Err(Diagnostic::error(
                                codes::DUPLICATE,
                                sp,
                                format!("label `{l}` occurs twice in one branch"),
                            ));
                        }
                        labels.push(l);
                        if !self.eat(&Tok::Plus) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace, "`}`")?;
                Ok(Usage::star(labels))
            }
            Tok::VariantOpen => {
                self.advance();
                let t = self.usage(Qualifier::Lin, false)?;
                self.expect(Tok::Plus, "`+` between variant arms")?;
                let f = self.usage(Qualifier::Lin, false)?;
                self.expect(Tok::VariantClose, "`»`")?;
                Ok(Usage::variant(t, f))
            }
            Tok::Kw(Keyword::Mu) => {
                self.advance();
                let (x, _) = self.ident("recursion variable")?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.usage(dq, top)?;
                Ok(Usage::rec(x, body))
            }
            other => self.err(format!("expected a usage, found {other}")),
        }
    }

    fn choices(&mut self, dq: Qualifier) -> PResult<Vec<(String, Option<Usage>)>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        if !self.at(&Tok::RBrace) {
            loop {
                let (label, _) = self.ident("method label")?;
                let cont = if self.eat(&Tok::Semi) {
                    Some(self.usage(dq, false)?)
                } else {
                    None
                };
                out.push((label, cont));
                if !self.eat(&Tok::Plus) {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(out)
    }

    // ------------------------------------------------------------- statements

    fn block(&mut self) -> PResult<Expr> {
        let open = self.expect(Tok::LBrace, "`{`")?;
        let body = self.statements(open)?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(body)
    }

    fn is_decl_start(&self) -> bool {
        match self.peek() {
            Tok::Kw(Keyword::Int | Keyword::String | Keyword::Boolean) => true,
            Tok::Kw(Keyword::Unit) => matches!(self.peek_at(1), Tok::Ident(_)),
            Tok::Ident(_) => matches!(self.peek_at(1), Tok::Ident(_) | Tok::LBracket),
            _ => false,
        }
    }

    /// Statements up to (not including) the closing `}`. The value of a block
    /// is the value of its last statement; an empty block is `unit`.
    fn statements(&mut self, open: Span) -> PResult<Expr> {
        enum Stmt {
            Expr(Expr),
            Decl(String, Type, Expr, Span),
        }
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                Tok::RBrace | Tok::Eof => break,
                Tok::Semi => {
                    self.advance();
                    continue;
                }
                _ => {}
            }
            if self.is_decl_start() {
                let start = self.span();
                let ty = self.ty()?;
                let (name, _) = self.ident("variable name")?;
                self.expect(Tok::Assign, "`=` (local declarations need an initializer)")?;
                let init = self.expr()?;
                let span = start.to(self.prev_span());
                stmts.push(Stmt::Decl(name, ty, init, span));
            } else {
                stmts.push(Stmt::Expr(self.expr()?));
            }
            let ended_with_block = self.prev_tok() == Some(&Tok::RBrace);
            if !self.eat(&Tok::Semi) && !self.at(&Tok::RBrace) && !ended_with_block {
                return self.err(format!("expected `;`, found {}", self.peek()));
            }
        }
        let mut acc: Option<Expr> = None;
        for stmt in stmts.into_iter().rev() {
            acc = Some(match (stmt, acc) {
                (Stmt::Expr(e), None) => e,
                (Stmt::Expr(e), Some(rest)) => Expr::seq(e, rest),
                (Stmt::Decl(x, ty, init, span), rest) => {
                    let body =
                        rest.unwrap_or_else(|| Expr::new(ExprKind::Value(Value::Unit), span));
                    let span = span.to(body.span);
                    Expr::new(ExprKind::Let(x, ty, Box::new(init), Box::new(body)), span)
                }
            });
        }
        Ok(acc.unwrap_or_else(|| Expr::new(ExprKind::Value(Value::Unit), open)))
    }

    /// The branch of an `if` or the body of a `while`: a block, or a single
    /// expression whose `;` is absorbed when an `else` follows.
    fn branch(&mut self) -> PResult<Expr> {
        if self.at(&Tok::LBrace) {
            return self.block();
        }
        let e = self.expr()?;
        if self.at(&Tok::Semi) && *self.peek_at(1) == Tok::Kw(Keyword::Else) {
            self.advance();
        }
        Ok(e)
    }

    // ------------------------------------------------------------ expressions

    pub fn expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek() {
            Tok::Kw(Keyword::Spawn) => {
                self.advance();
                let body = self.expr()?;
                let span = start.to(self.prev_span());
                return Ok(Expr::new(ExprKind::Spawn(Box::new(body)), span));
            }
            Tok::Kw(Keyword::If) => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then = self.branch()?;
                let els = if self.eat(&Tok::Kw(Keyword::Else)) {
                    self.branch()?
                } else {
                    Expr::new(ExprKind::Value(Value::Unit), self.prev_span())
                };
                let span = start.to(self.prev_span());
                return Ok(Expr::new(
                    ExprKind::If(Box::new(cond), Box::new(then), Box::new(els)),
                    span,
                ));
            }
            Tok::Kw(Keyword::While) => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.branch()?;
                let span = start.to(self.prev_span());
                return Ok(Expr::new(
                    ExprKind::While(Box::new(cond), Box::new(body)),
                    span,
                ));
            }
            _ => {}
        }
        let lhs = self.comparison()?;
        if self.at(&Tok::Assign) {
            let place = match lhs.kind {
                ExprKind::Read(p @ (Place::Ident(_) | Place::Field(Owner::This, _))) => p,
                _ => {
                    return Err(Diagnostic::error(
                        codes::PARSE,
                        lhs.span,
                        "only fields and variables can be assigned",
                    ))
                }
            };
            self.advance();
            let rhs = self.expr()?;
            let span = start.to(self.prev_span());
            return Ok(Expr::new(ExprKind::Assign(place, Box::new(rhs)), span));
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Le => BinOp::Le,
            Tok::Ge => BinOp::Ge,
            Tok::EqEq => BinOp::Eq,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.additive()?;
        let span = lhs.span.to(rhs.span);
        Ok(Expr::new(
            ExprKind::BinOp(op, Box::new(lhs), Box::new(rhs)),
            span,
        ))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.primary()?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::BinOp(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let e = self.primary_inner()?;
        if self.at(&Tok::Dot) {
            return self
                .err("calls and field accesses are only allowed on `this`, fields and variables");
        }
        Ok(e)
    }

    fn primary_inner(&mut self) -> PResult<Expr> {
        let start = self.span();
        let lit = |v| Ok(Expr::new(ExprKind::Value(v), start));
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                lit(Value::Int(n))
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.advance();
                let Tok::Int(n) = self.advance() else {
                    unreachable!()
                };
                Ok(Expr::new(
                    ExprKind::Value(Value::Int(-n)),
                    start.to(self.prev_span()),
                ))
            }
            Tok::Str(s) => {
                self.advance();
                lit(Value::Str(s))
            }
            Tok::Kw(Keyword::True) => {
                self.advance();
                lit(Value::Bool(true))
            }
            Tok::Kw(Keyword::False) => {
                self.advance();
                lit(Value::Bool(false))
            }
            Tok::Kw(Keyword::Unit) => {
                self.advance();
                lit(Value::Unit)
            }
            Tok::LParen => {
                self.advance();
                let mut e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                e.span = start.to(self.prev_span());
                Ok(e)
            }
            Tok::LBrace => {
                let mut e = self.block()?;
                e.span = start.to(self.prev_span());
                Ok(e)
            }
            Tok::Kw(Keyword::Spawn | Keyword::If | Keyword::While) => self.expr(),
            Tok::Kw(Keyword::New) => {
                self.advance();
                let (c, _) = self.ident("class name after `new`")?;
                if self.eat(&Tok::LParen) {
                    self.expect(
                        Tok::RParen,
                        "`)` (constructors take no arguments; call init)",
                    )?;
                }
                Ok(Expr::new(ExprKind::New(c), start.to(self.prev_span())))
            }
            Tok::Kw(Keyword::Print) => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::new(
                    ExprKind::Print(Box::new(e)),
                    start.to(self.prev_span()),
                ))
            }
            Tok::Kw(Keyword::This) => {
                self.advance();
                if !self.eat(&Tok::Dot) {
                    return Err(Diagnostic::error(
                        codes::PARSE,
                        start,
                        "`this` can only be used to access fields or call methods",
                    ));
                }
                let (name, _) = self.ident("field or method name")?;
                if self.at(&Tok::LParen) {
                    let args = self.args()?;
                    let kind = ExprKind::Call(Receiver::Object(Owner::This), name, args);
                    return Ok(Expr::new(kind, start.to(self.prev_span())));
                }
                let place = Place::Field(Owner::This, name);
                self.place_suffix(place, start)
            }
            Tok::Ident(name) => {
                self.advance();
                if self.at(&Tok::LParen) {
                    let args = self.args()?;
                    let kind = ExprKind::Call(Receiver::Object(Owner::This), name, args);
                    return Ok(Expr::new(kind, start.to(self.prev_span())));
                }
                self.place_suffix(Place::Ident(name), start)
            }
            other => self.err(format!("expected an expression, found {other}")),
        }
    }

    /// After a field or variable: either a call on it or a plain read.
    fn place_suffix(&mut self, place: Place, start: Span) -> PResult<Expr> {
        if self.at(&Tok::Dot) {
            self.advance();
            let (m, _) = self.ident("method name")?;
            if !self.at(&Tok::LParen) {
                return Err(Diagnostic::error(
                    codes::PARSE,
                    start.to(self.prev_span()),
                    "fields are private; only `this.f` may be accessed",
                ));
            }
            let args = self.args()?;
            let kind = ExprKind::Call(Receiver::Place(place), m, args);
            return Ok(Expr::new(kind, start.to(self.prev_span())));
        }
        Ok(Expr::new(ExprKind::Read(place), start.to(self.prev_span())))
    }
}
