//! Expression typing: `Γ ⊢ e : t ⊣ Γ'`.

use crate::ast::{
    BinOp, ClassDecl, Expr, ExprKind, MethodDecl, Owner, Place, Program, Receiver, Type, Value,
};
use crate::diagnostics::{codes, Diagnostic};
use crate::usage::Usage;

use super::env::{join_env, join_sigma, render_sigma, sigma_sub, Binding, Env, Key, Sigma};
use super::{subtype_with, Options};

pub type CResult<T> = Result<T, Diagnostic>;

pub struct Checker<'p> {
    pub prog: &'p Program,
    pub class: &'p ClassDecl,
    pub opts: Options,
    /// Declared types of the parameters and locals in scope.
    pub idents: Vec<(String, Type)>,
}

/// Result of a call whose continuation is a variant: the receiver and
/// the two usages it may be left at.
struct VariantCall {
    key: Key,
    class: String,
    on_true: Usage,
    on_false: Usage,
}

impl VariantCall {
    fn split(self, s: Sigma) -> (Sigma, Sigma) {
        let mut pos = s.clone();
        let mut neg = s;
        pos.insert(
            self.key.clone(),
            Binding::Ty(Type::Object(self.class.clone(), self.on_true)),
        );
        neg.insert(
            self.key,
            Binding::Ty(Type::Object(self.class, self.on_false)),
        );
        (pos, neg)
    }
}

fn err(code: &'static str, e: &Expr, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(code, e.span, msg)
}

impl<'p> Checker<'p> {
    pub fn new(prog: &'p Program, class: &'p ClassDecl, opts: Options) -> Checker<'p> {
        Checker {
            prog,
            class,
            opts,
            idents: Vec::new(),
        }
    }

    fn sub(&self, a: &Type, b: &Type) -> bool {
        subtype_with(a, b, self.opts.variant_rule)
    }

    fn declared(&self, key: &Key) -> Option<Type> {
        match key {
            Key::Field(f) => self.class.field(f).map(|d| d.ty.clone()),
            Key::Ident(x) => self
                .idents
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, t)| t.clone()),
        }
    }

    fn key(&self, p: &Place, e: &Expr) -> CResult<Key> {
        Key::of_place(p).ok_or_else(|| err(codes::PARSE, e, "runtime place in source program"))
    }

    /// T-LinVar / T-UnVar / T-LinField / T-UnField.
    fn read(&self, mut s: Sigma, p: &Place, e: &Expr) -> CResult<(Type, Sigma)> {
        let key = self.key(p, e)?;
        match s.get(&key) {
            None => Err(err(
                codes::LINEAR_REUSE,
                e,
                format!("{key} is linear and has already been used"),
            )),
            Some(Binding::Unassigned) => Err(err(
                codes::UNASSIGNED_FIELD,
                e,
                format!("{key} is read before it is assigned"),
            )),
            Some(Binding::Ty(t)) => {
                let t = t.clone();
                if t.is_lin() {
                    s.remove(&key);
                }
                Ok((t, s))
            }
        }
    }

    pub fn expr(&mut self, s: Sigma, e: &Expr) -> CResult<(Type, Sigma)> {
        match &e.kind {
            ExprKind::Value(v) => Ok((self.value_type(v, e)?, s)),
            ExprKind::Read(p) => self.read(s, p, e),
            ExprKind::Seq(a, b) => {
                let s = self.discard(s, a)?;
                self.expr(s, b)
            }
            ExprKind::Assign(p, rhs) => {
                let (t, mut s) = self.expr(s, rhs)?;
                let key = self.key(p, e)?;
                let declared = self
                    .declared(&key)
                    .ok_or_else(|| err(codes::UNKNOWN_IDENT, e, format!("unknown target {key}")))?;
                if !self.sub(&t, &declared) {
                    return Err(err(
                        codes::TYPE_MISMATCH,
                        e,
                        format!("cannot assign {t} to {key} of type {declared}"),
                    ));
                }
                if let Some(Binding::Ty(prev)) = s.get(&key) {
                    if prev.is_lin() {
                        return Err(err(
                            codes::ASSIGN_OVER_LINEAR,
                            e,
                            format!("{key} still holds a linear value of type {prev}"),
                        ));
                    }
                }
                s.insert(key, Binding::Ty(t));
                Ok((Type::Unit, s))
            }
            ExprKind::New(c) => {
                let class = self
                    .prog
                    .class(c)
                    .ok_or_else(|| err(codes::UNKNOWN_CLASS, e, format!("unknown class {c}")))?;
                Ok((Type::Object(c.clone(), class.usage.clone()), s))
            }
            ExprKind::Call(..) => {
                let (t, s, variant) = self.call(s, e)?;
                if let Some(v) = variant {
                    return Err(err(
                        codes::VARIANT_OUTSIDE_CONDITION,
                        e,
                        format!(
                            "the result of this call decides the usage of {}; test it in an if or while condition",
                            v.key
                        ),
                    ));
                }
                Ok((t, s))
            }
            ExprKind::If(c, then, els) => {
                let (pos, neg) = self.cond(s, c)?;
                let (tt, st) = self.expr(pos, then)?;
                let (tf, sf) = self.expr(neg, els)?;
                let t = self.join_types(&tt, &tf, e)?;
                let s = join_sigma(&st, &sf, self.opts.variant_rule).ok_or_else(|| {
                    err(
                        codes::BRANCH_ENV_MISMATCH,
                        e,
                        format!(
                            "branches end in different environments: {} and {}",
                            render_sigma(&st),
                            render_sigma(&sf)
                        ),
                    )
                })?;
                Ok((t, s))
            }
            ExprKind::While(c, body) => {
                let entry = s.clone();
                let (pos, neg) = self.cond(s, c)?;
                let (_, after) = self.expr(pos, body)?;
                if !sigma_sub(&after, &entry, self.opts.variant_rule) {
                    return Err(err(
                        codes::BRANCH_ENV_MISMATCH,
                        e,
                        format!(
                            "loop body must restore the environment {}, found {}",
                            render_sigma(&entry),
                            render_sigma(&after)
                        ),
                    ));
                }
                Ok((Type::Unit, neg))
            }
            ExprKind::Spawn(body) => {
                let (t, s) = self.expr(s, body)?;
                if t.is_lin() {
                    return Err(err(
                        codes::SPAWN_LINEAR,
                        e,
                        format!("spawned expression has linear type {t}"),
                    ));
                }
                Ok((Type::Unit, s))
            }
            ExprKind::Print(arg) => {
                let (t, s) = self.expr(s, arg)?;
                if t.is_lin() {
                    return Err(err(
                        codes::TYPE_MISMATCH,
                        e,
                        format!("cannot print a value of linear type {t}"),
                    ));
                }
                Ok((Type::Unit, s))
            }
            ExprKind::BinOp(op, l, r) => {
                let (tl, s) = self.expr(s, l)?;
                let (tr, s) = self.expr(s, r)?;
                Ok((self.binop(*op, &tl, &tr, e)?, s))
            }
            ExprKind::Let(x, ty, init, body) => {
                let s = self.bind_local(s, x, ty, init, e)?;
                let (t, s) = self.expr(s, body)?;
                self.idents.pop();
                let s = self.drop_ident(s, x, e)?;
                Ok((t, s))
            }
            ExprKind::InSync(..) | ExprKind::Resolve(..) | ExprKind::Active(..) => Err(err(
                codes::PARSE,
                e,
                "runtime-only expression in source program",
            )),
        }
    }

    /// T-Seq: the value of the first component is dropped, so it must not
    /// be linear.
    fn discard(&mut self, s: Sigma, a: &Expr) -> CResult<Sigma> {
        let (t, s) = self.expr(s, a)?;
        if t.is_lin() {
            return Err(err(
                codes::SEQ_DISCARD_LINEAR,
                a,
                format!("value of linear type {t} is discarded"),
            ));
        }
        Ok(s)
    }

    fn bind_local(
        &mut self,
        s: Sigma,
        x: &str,
        ty: &Type,
        init: &Expr,
        e: &Expr,
    ) -> CResult<Sigma> {
        let (t, mut s) = self.expr(s, init)?;
        if !self.sub(&t, ty) {
            return Err(err(
                codes::TYPE_MISMATCH,
                init,
                format!("cannot initialise {x}: {ty} with a value of type {t}"),
            ));
        }
        if s.contains_key(&Key::Ident(x.to_string())) {
            return Err(err(codes::DUPLICATE, e, format!("{x} is already defined")));
        }
        s.insert(Key::Ident(x.to_string()), Binding::Ty(ty.clone()));
        self.idents.push((x.to_string(), ty.clone()));
        Ok(s)
    }

    /// Removes a parameter or local at the end of its scope; it must have
    /// been used to the end of its protocol.
    pub fn drop_ident(&self, mut s: Sigma, x: &str, e: &Expr) -> CResult<Sigma> {
        match s.remove(&Key::Ident(x.to_string())) {
            Some(b) if !b.is_un() => Err(err(
                codes::PARAM_NOT_CONSUMED,
                e,
                format!("{x} ends with linear type {b}; its protocol is not finished"),
            )),
            _ => Ok(s),
        }
    }

    fn value_type(&self, v: &Value, e: &Expr) -> CResult<Type> {
        Ok(match v {
            Value::Unit => Type::Unit,
            Value::Bool(_) => Type::Boolean,
            Value::Int(_) => Type::Int,
            Value::Str(_) => Type::Str,
            Value::Obj(_) | Value::Uninit => {
                return Err(err(codes::PARSE, e, "runtime value in source program"))
            }
        })
    }

    fn join_types(&self, a: &Type, b: &Type, e: &Expr) -> CResult<Type> {
        if self.sub(a, b) {
            Ok(b.clone())
        } else if self.sub(b, a) {
            Ok(a.clone())
        } else {
            Err(err(
                codes::TYPE_MISMATCH,
                e,
                format!("branches have incompatible types {a} and {b}"),
            ))
        }
    }

    fn binop(&self, op: BinOp, l: &Type, r: &Type, e: &Expr) -> CResult<Type> {
        let basic = |t: &Type| matches!(t, Type::Unit | Type::Boolean | Type::Int | Type::Str);
        let t = match op {
            BinOp::Add if *l == Type::Int && *r == Type::Int => Some(Type::Int),
            BinOp::Add if (*l == Type::Str && basic(r)) || (*r == Type::Str && basic(l)) => {
                Some(Type::Str)
            }
            BinOp::Sub if *l == Type::Int && *r == Type::Int => Some(Type::Int),
            BinOp::Le | BinOp::Ge if *l == Type::Int && *r == Type::Int => Some(Type::Boolean),
            BinOp::Eq if l == r && basic(l) => Some(Type::Boolean),
            _ => None,
        };
        t.ok_or_else(|| {
            err(
                codes::TYPE_MISMATCH,
                e,
                format!("operator {} does not apply to {l} and {r}", op.symbol()),
            )
        })
    }

    fn args(&mut self, mut s: Sigma, m: &MethodDecl, args: &[Expr], e: &Expr) -> CResult<Sigma> {
        if args.len() != m.params.len() {
            return Err(err(
                codes::ARITY,
                e,
                format!(
                    "{} expects {} argument(s), found {}",
                    m.name,
                    m.params.len(),
                    args.len()
                ),
            ));
        }
        for (a, p) in args.iter().zip(&m.params) {
            let (t, s2) = self.expr(s, a)?;
            if !self.sub(&t, &p.ty) {
                return Err(err(
                    codes::TYPE_MISMATCH,
                    a,
                    format!(
                        "argument {} of {} expects {}, found {t}",
                        p.name, m.name, p.ty
                    ),
                ));
            }
            s = s2;
        }
        Ok(s)
    }

    /// T-Call and self-calls. A call whose continuation is a variant
    /// returns the pending resolution instead of failing; the caller
    /// decides whether that is legal.
    fn call(&mut self, s: Sigma, e: &Expr) -> CResult<(Type, Sigma, Option<VariantCall>)> {
        let ExprKind::Call(recv, m, args) = &e.kind else {
            unreachable!()
        };
        match recv {
            Receiver::Object(Owner::This) => {
                let decl = self.class.method(m).ok_or_else(|| {
                    err(
                        codes::UNKNOWN_METHOD,
                        e,
                        format!("class {} has no method {m}", self.class.name),
                    )
                })?;
                let s = self.args(s, decl, args, e)?;
                self.self_call_state(&s, m, e)?;
                Ok((decl.ret.clone(), s, None))
            }
            Receiver::Object(Owner::Obj(_)) => {
                Err(err(codes::PARSE, e, "runtime call in source program"))
            }
            Receiver::Place(p) => {
                let key = self.key(p, e)?;
                let (class_name, usage) = match s.get(&key) {
                    None => {
                        return Err(err(
                            codes::LINEAR_REUSE,
                            e,
                            format!("{key} is linear and has already been used"),
                        ))
                    }
                    Some(Binding::Unassigned) => {
                        return Err(err(
                            codes::UNASSIGNED_FIELD,
                            e,
                            format!("{key} is used before it is assigned"),
                        ))
                    }
                    Some(Binding::Ty(Type::Object(c, u))) => (c.clone(), u.clone()),
                    Some(Binding::Ty(t)) => {
                        return Err(err(
                            codes::NOT_AN_OBJECT,
                            e,
                            format!("{key} has type {t}, which has no methods"),
                        ))
                    }
                };
                let class = self.prog.class(&class_name).ok_or_else(|| {
                    err(
                        codes::UNKNOWN_CLASS,
                        e,
                        format!("unknown class {class_name}"),
                    )
                })?;
                let decl = class.method(m).ok_or_else(|| {
                    err(
                        codes::UNKNOWN_METHOD,
                        e,
                        format!("class {class_name} has no method {m}"),
                    )
                })?;
                let s = self.args(s, decl, args, e)?;
                // The receiver must be where it was before the arguments ran.
                match s.get(&key) {
                    Some(Binding::Ty(Type::Object(c, u2))) if *c == class_name && *u2 == usage => {}
                    _ => {
                        return Err(err(
                            codes::LINEAR_REUSE,
                            e,
                            format!("{key} is used by the arguments of its own call"),
                        ))
                    }
                }
                let Some(cont) = usage.after_call(m) else {
                    let avail = match usage.unfold() {
                        Usage::Branch(_, es) => {
                            es.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>()
                        }
                        _ => Vec::new(),
                    };
                    let avail = if avail.is_empty() {
                        "none".to_string()
                    } else {
                        avail.join(", ")
                    };
                    return Err(err(
                        codes::CALL_UNAVAILABLE,
                        e,
                        format!(
                            "method {m} is not available on {key} at usage {usage} (available: {avail})"
                        ),
                    ));
                };
                let mut s = s;
                let variant = match cont.unfold() {
                    Usage::Variant(t, f) => {
                        if decl.ret != Type::Boolean {
                            return Err(err(
                                codes::NOT_BOOLEAN_VARIANT,
                                e,
                                format!("{m} is followed by a variant but does not return boolean"),
                            ));
                        }
                        Some(VariantCall {
                            key: key.clone(),
                            class: class_name.clone(),
                            on_true: *t,
                            on_false: *f,
                        })
                    }
                    _ => None,
                };
                s.insert(key, Binding::Ty(Type::Object(class_name, cont)));
                Ok((decl.ret.clone(), s, variant))
            }
        }
    }

    /// A call on `this` does not touch the usage, so every field has to be
    /// at its declared type when it happens.
    fn self_call_state(&self, s: &Sigma, m: &str, e: &Expr) -> CResult<()> {
        for f in &self.class.fields {
            let ok = match s.get(&Key::Field(f.name.clone())) {
                Some(Binding::Ty(t)) => self.sub(t, &f.ty) && self.sub(&f.ty, t),
                _ => false,
            };
            if !ok {
                let found = s
                    .get(&Key::Field(f.name.clone()))
                    .map(|b| b.to_string())
                    .unwrap_or_else(|| "nothing (consumed)".into());
                return Err(err(
                    codes::SELF_CALL_STATE,
                    e,
                    format!(
                        "call to {m} on this needs field {} at its declared type {}, found {found}",
                        f.name, f.ty
                    ),
                ));
            }
        }
        Ok(())
    }

    /// T-IfV / T-WhileV conditions and plain boolean conditions.
    pub fn cond(&mut self, s: Sigma, c: &Expr) -> CResult<(Sigma, Sigma)> {
        match &c.kind {
            ExprKind::Call(..) => {
                let (t, s, variant) = self.call(s, c)?;
                self.expect_boolean(&t, c)?;
                Ok(match variant {
                    Some(v) => v.split(s),
                    None => (s.clone(), s),
                })
            }
            ExprKind::Seq(a, b) => {
                let s = self.discard(s, a)?;
                self.cond(s, b)
            }
            _ => {
                let (t, s) = self.expr(s, c)?;
                self.expect_boolean(&t, c)?;
                Ok((s.clone(), s))
            }
        }
    }

    fn expect_boolean(&self, t: &Type, c: &Expr) -> CResult<()> {
        if *t != Type::Boolean {
            return Err(err(
                codes::TYPE_MISMATCH,
                c,
                format!("condition has type {t}, expected boolean"),
            ));
        }
        Ok(())
    }

    /// Body of a method whose continuation is a variant: boolean tail
    /// positions inject their environment into a pair (T-InjL / T-InjR).
    pub fn tail(&mut self, s: Sigma, e: &Expr) -> CResult<(Type, Env)> {
        match &e.kind {
            ExprKind::Value(Value::Bool(true)) => Ok((
                Type::Boolean,
                Env::Pair(Box::new(Env::Flat(s)), Box::new(Env::Any)),
            )),
            ExprKind::Value(Value::Bool(false)) => Ok((
                Type::Boolean,
                Env::Pair(Box::new(Env::Any), Box::new(Env::Flat(s))),
            )),
            ExprKind::Seq(a, b) => {
                let s = self.discard(s, a)?;
                self.tail(s, b)
            }
            ExprKind::Let(x, ty, init, body) => {
                let s = self.bind_local(s, x, ty, init, e)?;
                let (t, env) = self.tail(s, body)?;
                self.idents.pop();
                let env = super::env::map_flat(env, &mut |s| self.drop_ident(s, x, e))?;
                Ok((t, env))
            }
            ExprKind::If(c, then, els) => {
                let (pos, neg) = self.cond(s, c)?;
                let (tt, et) = self.tail(pos, then)?;
                let (tf, ef) = self.tail(neg, els)?;
                let t = self.join_types(&tt, &tf, e)?;
                let (et, ef) = if t == Type::Boolean {
                    (as_pair(et), as_pair(ef))
                } else {
                    (et, ef)
                };
                let env = join_env(&et, &ef, self.opts.variant_rule).ok_or_else(|| {
                    err(
                        codes::BRANCH_ENV_MISMATCH,
                        e,
                        format!("branches end in different environments: {et} and {ef}"),
                    )
                })?;
                Ok((t, env))
            }
            _ => {
                if let ExprKind::Call(..) = e.kind {
                    let (t, s, variant) = self.call(s, e)?;
                    if let Some(v) = variant {
                        let (pos, neg) = v.split(s);
                        return Ok((
                            t,
                            Env::Pair(Box::new(Env::Flat(pos)), Box::new(Env::Flat(neg))),
                        ));
                    }
                    return Ok(flat_or_pair(t, s));
                }
                let (t, s) = self.expr(s, e)?;
                Ok(flat_or_pair(t, s))
            }
        }
    }
}

fn flat_or_pair(t: Type, s: Sigma) -> (Type, Env) {
    let f = Env::Flat(s);
    if t == Type::Boolean {
        (t, Env::Pair(Box::new(f.clone()), Box::new(f)))
    } else {
        (t, f)
    }
}

fn as_pair(e: Env) -> Env {
    match e {
        Env::Flat(_) => Env::Pair(Box::new(e.clone()), Box::new(e)),
        other => other,
    }
}
