//! Source rendering. The output of [`pretty_program`] parses back to a
//! structurally equal program.

use std::fmt::Write;

use super::{
    BinOp, ClassDecl, Expr, ExprKind, MethodDecl, Owner, Place, Program, Receiver, Type, Value,
};
use crate::usage::{Qualifier, Usage};

pub fn pretty_usage(u: &Usage) -> String {
    let mut out = String::new();
    write_usage(&mut out, u);
    out
}

fn star_labels(u: &Usage) -> Option<Vec<&str>> {
    let Usage::Rec(x, body) = u else { return None };
    let Usage::Branch(Qualifier::Un, entries) = body.as_ref() else {
        return None;
    };
    if entries.is_empty() {
        return None;
    }
    entries
        .iter()
        .map(|(l, cont)| match cont {
            Usage::Var(y) if y == x => Some(l.as_str()),
            _ => None,
        })
        .collect()
}

fn write_usage(out: &mut String, u: &Usage) {
    match u {
        Usage::Branch(Qualifier::Un, entries) if entries.is_empty() => out.push_str("end"),
        Usage::Branch(q, entries) if entries.len() == 1 => {
            let (label, cont) = &entries[0];
            let _ = write!(out, "{q} {label}; ");
            write_usage(out, cont);
        }
        Usage::Branch(q, entries) => {
            let _ = write!(out, "{q}{{");
            for (i, (label, cont)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                out.push_str(label);
                if !cont.is_end() {
                    out.push_str("; ");
                    write_usage(out, cont);
                }
            }
            out.push('}');
        }
        Usage::Variant(t, f) => {
            out.push('«');
            write_usage(out, t);
            out.push_str(" + ");
            write_usage(out, f);
            out.push('»');
        }
        Usage::Var(x) => out.push_str(x),
        Usage::Rec(x, body) => match star_labels(u) {
            Some(labels) => {
                let _ = write!(out, "*{{{}}}", labels.join(" + "));
            }
            None => {
                let _ = write!(out, "mu {x}. ");
                write_usage(out, body);
            }
        },
    }
}

pub fn pretty_type(t: &Type) -> String {
    match t {
        Type::Unit => "unit".into(),
        Type::Boolean => "boolean".into(),
        Type::Int => "int".into(),
        Type::Str => "string".into(),
        Type::Object(c, u) => format!("{c}[{}]", pretty_usage(u)),
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Str(s) => out.push_str(&escape(s)),
        other => {
            let _ = write!(out, "{other}");
        }
    }
}

fn write_owner(out: &mut String, o: &Owner) {
    match o {
        Owner::This => out.push_str("this"),
        Owner::Obj(id) => {
            let _ = write!(out, "{id}");
        }
    }
}

fn write_place(out: &mut String, p: &Place) {
    match p {
        Place::Field(o, f) => {
            write_owner(out, o);
            out.push('.');
            out.push_str(f);
        }
        Place::Ident(x) => out.push_str(x),
        Place::Slot(s) => {
            let _ = write!(out, "{s}");
        }
    }
}

/// Binding strength used to decide where parentheses are needed.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Level {
    Stmt,
    Compare,
    Additive,
    Primary,
}

fn level_of(e: &Expr) -> Level {
    match &e.kind {
        ExprKind::Assign(..)
        | ExprKind::If(..)
        | ExprKind::While(..)
        | ExprKind::Spawn(_)
        | ExprKind::Seq(..)
        | ExprKind::Let(..) => Level::Stmt,
        ExprKind::BinOp(op, ..) if op.is_comparison() => Level::Compare,
        ExprKind::BinOp(..) => Level::Additive,
        _ => Level::Primary,
    }
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line_start(&mut self) {
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
    }

    /// Flattens right-nested sequences and local declarations into statements.
    fn statements<'a>(e: &'a Expr, acc: &mut Vec<&'a Expr>) {
        match &e.kind {
            ExprKind::Seq(a, b) => {
                acc.push(a);
                Printer::statements(b, acc);
            }
            ExprKind::Let(_, _, _, body) => {
                acc.push(e);
                Printer::statements(body, acc);
            }
            _ => acc.push(e),
        }
    }

    /// `{ ... }` with one statement per line.
    fn block(&mut self, e: &Expr) {
        self.out.push_str("{\n");
        self.indent += 1;
        let mut stmts = Vec::new();
        Printer::statements(e, &mut stmts);
        for s in stmts {
            self.line_start();
            self.statement(s);
            self.out.push('\n');
        }
        self.indent -= 1;
        self.line_start();
        self.out.push('}');
    }

    fn statement(&mut self, s: &Expr) {
        match &s.kind {
            ExprKind::Let(x, ty, init, _) => {
                let _ = write!(self.out, "{} {x} = ", pretty_type(ty));
                self.expr(init, Level::Stmt);
                self.out.push(';');
            }
            ExprKind::Seq(..) => self.block(s),
            ExprKind::If(..) | ExprKind::While(..) => self.expr(s, Level::Stmt),
            _ => {
                self.expr(s, Level::Stmt);
                self.out.push(';');
            }
        }
    }

    fn expr(&mut self, e: &Expr, ctx: Level) {
        let needs_parens = level_of(e) < ctx;
        if needs_parens {
            match &e.kind {
                ExprKind::Seq(..) | ExprKind::Let(..) => {
                    self.block(e);
                    return;
                }
                _ => self.out.push('('),
            }
        }
        match &e.kind {
            ExprKind::Value(v) => write_value(&mut self.out, v),
            ExprKind::Read(p) => write_place(&mut self.out, p),
            ExprKind::Seq(..) | ExprKind::Let(..) => self.block(e),
            ExprKind::Assign(p, rhs) => {
                write_place(&mut self.out, p);
                self.out.push_str(" = ");
                self.expr(rhs, Level::Stmt);
            }
            ExprKind::New(c) => {
                let _ = write!(self.out, "new {c}()");
            }
            ExprKind::Call(recv, m, args) => {
                match recv {
                    Receiver::Object(o) => write_owner(&mut self.out, o),
                    Receiver::Place(p) => write_place(&mut self.out, p),
                }
                let _ = write!(self.out, ".{m}(");
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.expr(a, Level::Stmt);
                }
                self.out.push(')');
            }
            ExprKind::If(c, t, f) => {
                self.out.push_str("if (");
                self.expr(c, Level::Stmt);
                self.out.push_str(") ");
                self.block(t);
                self.out.push_str(" else ");
                self.block(f);
            }
            ExprKind::While(c, b) => {
                self.out.push_str("while (");
                self.expr(c, Level::Stmt);
                self.out.push_str(") ");
                self.block(b);
            }
            ExprKind::Spawn(b) => {
                self.out.push_str("spawn ");
                self.expr(b, Level::Stmt);
            }
            ExprKind::Print(b) => {
                self.out.push_str("print(");
                self.expr(b, Level::Stmt);
                self.out.push(')');
            }
            ExprKind::BinOp(op, l, r) => {
                let (lctx, rctx) = match op {
                    BinOp::Add | BinOp::Sub => (Level::Additive, Level::Primary),
                    _ => (Level::Additive, Level::Additive),
                };
                self.expr(l, lctx);
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(r, rctx);
            }
            ExprKind::InSync(o, b) => {
                let _ = write!(self.out, "insync({o}, ");
                self.expr(b, Level::Stmt);
                self.out.push(')');
            }
            ExprKind::Resolve(o, b) => {
                let _ = write!(self.out, "resolve({o}, ");
                self.expr(b, Level::Stmt);
                self.out.push(')');
            }
            ExprKind::Active(o, m, b) => {
                let _ = write!(self.out, "active({o}.{m}, ");
                self.expr(b, Level::Stmt);
                self.out.push(')');
            }
        }
        if needs_parens {
            self.out.push(')');
        }
    }

    fn method(&mut self, m: &MethodDecl) {
        self.line_start();
        if m.sync {
            self.out.push_str("sync ");
        }
        let params: Vec<String> = m
            .params
            .iter()
            .map(|p| format!("{} {}", pretty_type(&p.ty), p.name))
            .collect();
        let _ = write!(
            self.out,
            "{} {}({}) ",
            pretty_type(&m.ret),
            m.name,
            params.join(", ")
        );
        self.block(&m.body);
        self.out.push('\n');
    }

    fn class(&mut self, c: &ClassDecl) {
        let _ = writeln!(self.out, "class {} {{", c.name);
        self.indent += 1;
        if c.usage_declared {
            self.line_start();
            let _ = writeln!(self.out, "usage {};", pretty_usage(&c.usage));
        }
        for f in &c.fields {
            self.line_start();
            let _ = writeln!(self.out, "{} {};", pretty_type(&f.ty), f.name);
        }
        for m in &c.methods {
            self.method(m);
        }
        self.indent -= 1;
        self.out.push_str("}\n");
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut p = Printer {
        out: String::new(),
        indent: 0,
    };
    let mut stmts = Vec::new();
    Printer::statements(e, &mut stmts);
    if stmts.len() == 1 && !matches!(e.kind, ExprKind::Let(..)) {
        p.expr(e, Level::Stmt);
    } else {
        for (i, s) in stmts.iter().enumerate() {
            if i > 0 {
                p.out.push(' ');
            }
            p.statement(s);
        }
        if p.out.ends_with(';') {
            p.out.pop();
        }
    }
    p.out
}

pub fn pretty_program(prog: &Program) -> String {
    let mut p = Printer {
        out: String::new(),
        indent: 0,
    };
    for (i, c) in prog.classes.iter().enumerate() {
        if i > 0 {
            p.out.push('\n');
        }
        p.class(c);
    }
    p.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Expr, ExprKind, Place, Value};
    use crate::usage::Usage;

    #[test]
    fn end_sugar() {
        let u = Usage::branch(Qualifier::Lin, [("init", Usage::end())]);
        assert_eq!(pretty_usage(&u), "lin init; end");
    }

    #[test]
    fn auctioneer_usage() {
        let u = Usage::branch(
            Qualifier::Lin,
            [("init", Usage::star(["selling", "bidding"]))],
        );
        assert_eq!(pretty_usage(&u), "lin init; *{selling + bidding}");
    }

    #[test]
    fn sequence_expression() {
        let e = Expr::seq(
            Expr::bare(ExprKind::Assign(
                Place::this_field("f"),
                Box::new(Expr::value(Value::Bool(true))),
            )),
            Expr::unit(),
        );
        assert_eq!(pretty_expr(&e), "this.f = true; unit");
    }

    #[test]
    fn general_recursion_and_variants() {
        let u = Usage::rec(
            "Y",
            Usage::branch(
                Qualifier::Lin,
                [("next", Usage::variant(Usage::var("Y"), Usage::end()))],
            ),
        );
        assert_eq!(pretty_usage(&u), "mu Y. lin next; «Y + end»");
    }
}
