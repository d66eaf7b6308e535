//! Name resolution: `where` expansion, shorthand object types, default
//! usages, `this` insertion and the well-formedness checks that need the
//! whole program.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::ast::{
    ClassDecl, Expr, ExprKind, MethodDecl, Owner, Place, Program, Receiver, Span, Type, MAIN_CLASS,
    MAIN_METHOD,
};
use crate::diagnostics::{codes, Diagnostic};
use crate::usage::Usage;

use super::parse::{RawClass, INITIAL_USAGE};

enum Binding<'a> {
    Raw(&'a Usage),
    Resolved(&'a Usage),
}

struct Expander<'a> {
    bindings: HashMap<&'a str, Binding<'a>>,
    stack: Vec<String>,
}

impl Expander<'_> {
    /// Replaces binding names by their definitions; a binding that refers
    /// to itself becomes a `mu`.
    fn expand(&mut self, u: &Usage, bound: &mut Vec<String>) -> Result<Usage, String> {
        Ok(match u {
            Usage::Branch(q, entries) => {
                let mut out = Vec::with_capacity(entries.len());
                for (l, c) in entries {
                    out.push((l.clone(), self.expand(c, bound)?));
                }
                Usage::Branch(*q, out)
            }
            Usage::Variant(t, f) => Usage::variant(self.expand(t, bound)?, self.expand(f, bound)?),
            Usage::Var(x) if bound.contains(x) || self.stack.contains(x) => u.clone(),
            Usage::Var(x) => match self.bindings.get(x.as_str()) {
                Some(Binding::Resolved(r)) => (*r).clone(),
                Some(Binding::Raw(raw)) => {
                    let raw = *raw;
                    self.stack.push(x.clone());
                    let body = self.expand(raw, &mut Vec::new());
                    self.stack.pop();
                    let body = body?;
                    if body.free_vars().contains(x) {
                        Usage::rec(x.clone(), body)
                    } else {
                        body
                    }
                }
                None => return Err(x.clone()),
            },
            Usage::Rec(x, body) => {
                // A local binder that shadows a binding name would capture
                // references produced by expansion; rename it first.
                let (x, body) = if self.bindings.contains_key(x.as_str()) {
                    let mut avoid: BTreeSet<String> = body.free_vars();
                    avoid.extend(self.bindings.keys().map(|k| k.to_string()));
                    let fresh = (1..)
                        .map(|i| format!("{x}{i}"))
                        .find(|n| !avoid.contains(n))
                        .unwrap();
                    let renamed = body.subst(x, &Usage::var(fresh.clone()));
                    (fresh, renamed)
                } else {
                    (x.clone(), (**body).clone())
                };
                bound.push(x.clone());
                let b = self.expand(&body, bound);
                bound.pop();
                Usage::rec(x, b?)
            }
        })
    }
}

/// Per-class information needed while resolving other classes.
struct ClassInfo<'a> {
    raw: &'a RawClass,
    usage: Usage,
    methods: BTreeSet<String>,
}

pub struct Resolver<'a> {
    classes: HashMap<&'a str, ClassInfo<'a>>,
    diags: Vec<Diagnostic>,
    reported_labels: HashSet<(String, String)>,
}

fn err(code: &'static str, span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(code, span, msg)
}

/// Resolves parsed classes into a program. Diagnostics are accumulated;
/// the returned program is usable only when none of them is an error.
pub fn resolve(raw: &[RawClass]) -> (Program, Vec<Diagnostic>) {
    let mut r = Resolver {
        classes: HashMap::new(),
        diags: Vec::new(),
        reported_labels: HashSet::new(),
    };
    for c in raw {
        if r.classes.contains_key(c.name.as_str()) {
            r.diags.push(err(
                codes::DUPLICATE,
                c.span,
                format!("class {} is declared more than once", c.name),
            ));
            continue;
        }
        let methods = c.methods.iter().map(|m| m.name.clone()).collect();
        r.classes.insert(
            &c.name,
            ClassInfo {
                raw: c,
                usage: Usage::end(),
                methods,
            },
        );
    }
    // Initial usages first: shorthand types in any class depend on them.
    let mut seen = HashSet::new();
    for c in raw {
        if !seen.insert(c.name.as_str()) {
            continue;
        }
        let u = r.class_usage(c);
        r.classes.get_mut(c.name.as_str()).unwrap().usage = u;
    }
    let mut classes = Vec::new();
    let mut seen = HashSet::new();
    for c in raw {
        if seen.insert(c.name.as_str()) {
            classes.push(r.class(c));
        }
    }
    let program = Program { classes };
    r.check_main(&program);
    (program, r.diags)
}

impl<'a> Resolver<'a> {
    fn expander(&self, class: &'a RawClass, init: Option<&'a Usage>) -> Expander<'a> {
        let mut bindings = HashMap::new();
        for (n, u, _) in &class.bindings {
            bindings.insert(n.as_str(), Binding::Raw(u));
        }
        if let Some(init) = init {
            bindings.insert(INITIAL_USAGE, Binding::Resolved(init));
        }
        Expander {
            bindings,
            stack: Vec::new(),
        }
    }

    /// Expands, closes and validates a usage written for objects of `class`.
    fn usage_for(&mut self, class: &str, u: &Usage, span: Span) -> Option<Usage> {
        let info = &self.classes[class];
        let raw = info.raw;
        let init = &info.usage;
        let mut ex = self.expander(raw, Some(init));
        let expanded = match ex.expand(u, &mut Vec::new()) {
            Ok(e) => e,
            Err(name) => {
                self.diags.push(err(
                    codes::UNBOUND_NAME,
                    span,
                    format!("usage name `{name}` is not defined for class {class}"),
                ));
                return None;
            }
        };
        self.validate_usage(class, &expanded, span)
            .then_some(expanded)
    }

    fn validate_usage(&mut self, class: &str, u: &Usage, span: Span) -> bool {
        let mut ok = true;
        if !u.is_contractive() {
            self.diags.push(err(
                codes::NOT_CONTRACTIVE,
                span,
                format!("usage `{u}` is not contractive"),
            ));
            ok = false;
        }
        if let Some(x) = u.free_vars().into_iter().next() {
            self.diags.push(err(
                codes::UNBOUND_NAME,
                span,
                format!("usage variable `{x}` is not bound"),
            ));
            ok = false;
        }
        let methods = &self.classes[class].methods;
        let missing: Vec<String> = u.labels().difference(methods).cloned().collect();
        for m in missing {
            ok = false;
            if !self.reported_labels.insert((class.to_string(), m.clone())) {
                continue;
            }
            self.diags.push(err(
                codes::UNDECLARED_METHOD,
                span,
                format!("method {m} not declared in class {class}"),
            ));
        }
        ok
    }

    fn class_usage(&mut self, c: &'a RawClass) -> Usage {
        let Some((raw_u, span)) = &c.usage else {
            return Usage::star(c.methods.iter().map(|m| m.name.clone()));
        };
        let mut seen = HashSet::new();
        for (n, _, sp) in &c.bindings {
            if !seen.insert(n) {
                self.diags.push(err(
                    codes::DUPLICATE,
                    *sp,
                    format!("usage name `{n}` is defined more than once"),
                ));
            }
        }
        let mut ex = self.expander(c, None);
        let u = match ex.expand(raw_u, &mut Vec::new()) {
            Ok(u) => u,
            Err(name) => {
                self.diags.push(err(
                    codes::UNBOUND_NAME,
                    *span,
                    format!("usage name `{name}` is not defined"),
                ));
                return Usage::end();
            }
        };
        if !self.validate_usage(&c.name, &u, *span) {
            return Usage::end();
        }
        if !matches!(u.unfold(), Usage::Branch(..)) {
            self.diags.push(err(
                codes::INIT_NOT_BRANCH,
                *span,
                format!("the initial usage of class {} must be a branch", c.name),
            ));
            return Usage::end();
        }
        u
    }

    fn ty(&mut self, t: &Type, span: Span) -> Type {
        match t {
            Type::Object(c, u) => {
                if !self.classes.contains_key(c.as_str()) {
                    self.diags.push(err(
                        codes::UNKNOWN_CLASS,
                        span,
                        format!("unknown class {c}"),
                    ));
                    return t.clone();
                }
                match self.usage_for(c, u, span) {
                    Some(u) => Type::Object(c.clone(), u),
                    None => Type::Object(c.clone(), Usage::end()),
                }
            }
            other => other.clone(),
        }
    }

    fn class(&mut self, c: &'a RawClass) -> ClassDecl {
        let mut names = HashSet::new();
        let mut fields = Vec::new();
        for f in &c.fields {
            if !names.insert(f.name.as_str()) {
                self.diags.push(err(
                    codes::DUPLICATE,
                    f.span,
                    format!("field {} is declared more than once", f.name),
                ));
            }
            let mut f = f.clone();
            f.ty = self.ty(&f.ty, f.span);
            fields.push(f);
        }
        let mut mnames = HashSet::new();
        let mut methods = Vec::new();
        for m in &c.methods {
            if !mnames.insert(m.name.as_str()) {
                self.diags.push(err(
                    codes::DUPLICATE,
                    m.span,
                    format!("method {} is declared more than once", m.name),
                ));
            }
            let mut m = m.clone();
            m.ret = self.ty(&m.ret, m.span);
            let mut pnames = HashSet::new();
            for p in &mut m.params {
                if !pnames.insert(p.name.clone()) {
                    self.diags.push(err(
                        codes::DUPLICATE,
                        p.span,
                        format!("parameter {} is declared more than once", p.name),
                    ));
                }
                p.ty = self.ty(&p.ty, p.span);
            }
            methods.push(m);
        }
        let usage = self.classes[c.name.as_str()].usage.clone();
        let mut decl = ClassDecl {
            name: c.name.clone(),
            usage,
            usage_declared: c.usage.is_some(),
            fields,
            methods,
            span: c.span,
        };
        decl = insert_this(decl);
        for i in 0..decl.methods.len() {
            let mut body = std::mem::replace(&mut decl.methods[i].body, Expr::unit());
            let mut scope: Vec<String> = decl.methods[i]
                .params
                .iter()
                .map(|p| p.name.clone())
                .collect();
            self.expr(&decl, &mut body, &mut scope);
            decl.methods[i].body = body;
        }
        decl
    }

    /// Resolves local declaration types and reports names that are neither
    /// in scope nor fields.
    fn expr(&mut self, class: &ClassDecl, e: &mut Expr, scope: &mut Vec<String>) {
        let span = e.span;
        match &mut e.kind {
            ExprKind::Let(x, ty, init, body) => {
                *ty = self.ty(ty, span);
                self.expr(class, init, scope);
                if scope.contains(x) {
                    self.diags.push(err(
                        codes::DUPLICATE,
                        span,
                        format!("variable {x} is already defined"),
                    ));
                }
                scope.push(x.clone());
                self.expr(class, body, scope);
                scope.pop();
                return;
            }
            ExprKind::Read(p)
            | ExprKind::Assign(p, _)
            | ExprKind::Call(Receiver::Place(p), _, _) => {
                self.place(class, p, span, scope);
            }
            ExprKind::Call(Receiver::Object(Owner::This), m, _) => {
                if class.method(m).is_none() {
                    self.diags.push(err(
                        codes::UNKNOWN_METHOD,
                        span,
                        format!("class {} has no method {m}", class.name),
                    ));
                }
            }
            ExprKind::New(c) if !self.classes.contains_key(c.as_str()) => {
                self.diags.push(err(
                    codes::UNKNOWN_CLASS,
                    span,
                    format!("unknown class {c}"),
                ));
            }
            _ => {}
        }
        e.for_each_child_mut(|c| self.expr(class, c, scope));
    }

    fn place(&mut self, class: &ClassDecl, p: &Place, span: Span, scope: &[String]) {
        match p {
            Place::Ident(x) if !scope.contains(x) => self.diags.push(err(
                codes::UNKNOWN_IDENT,
                span,
                format!("unknown variable {x}"),
            )),
            Place::Field(Owner::This, f) if class.field(f).is_none() => self.diags.push(err(
                codes::UNKNOWN_IDENT,
                span,
                format!("class {} has no field {f}", class.name),
            )),
            _ => {}
        }
    }

    fn check_main(&mut self, p: &Program) {
        let main = p.class(MAIN_CLASS);
        let ok = match main.and_then(|c| c.method(MAIN_METHOD)) {
            Some(m) => m.params.is_empty(),
            None => false,
        };
        if !ok {
            let span = main.map(|c| c.span).unwrap_or_default();
            self.diags.push(err(
                codes::NO_MAIN,
                span,
                format!("program needs a class {MAIN_CLASS} with a method {MAIN_METHOD}() taking no parameters"),
            ));
        }
    }
}

/// Sets the usage of a class written without one to `*{m1 + ... + mk}`
/// over its methods. Classes that declare a usage are returned unchanged.
pub fn insert_default_usage(mut c: ClassDecl) -> ClassDecl {
    if !c.usage_declared {
        c.usage = Usage::star(c.methods.iter().map(|m| m.name.clone()));
    }
    c
}

/// Rewrites bare names that refer to fields into `this.f`. Parameters and
/// locals in scope take precedence over fields of the same name.
pub fn insert_this(mut c: ClassDecl) -> ClassDecl {
    let fields: HashSet<String> = c.fields.iter().map(|f| f.name.clone()).collect();
    for m in &mut c.methods {
        let mut scope: Vec<String> = m.params.iter().map(|p| p.name.clone()).collect();
        this_expr(&mut m.body, &fields, &mut scope);
    }
    c
}

fn this_place(p: &mut Place, fields: &HashSet<String>, scope: &[String]) {
    if let Place::Ident(x) = p {
        if !scope.contains(x) && fields.contains(x) {
            *p = Place::Field(Owner::This, std::mem::take(x));
        }
    }
}

fn this_expr(e: &mut Expr, fields: &HashSet<String>, scope: &mut Vec<String>) {
    match &mut e.kind {
        ExprKind::Let(x, _, init, body) => {
            this_expr(init, fields, scope);
            scope.push(x.clone());
            this_expr(body, fields, scope);
            scope.pop();
            return;
        }
        ExprKind::Read(p) | ExprKind::Assign(p, _) | ExprKind::Call(Receiver::Place(p), _, _) => {
            this_place(p, fields, scope);
        }
        _ => {}
    }
    e.for_each_child_mut(|c| this_expr(c, fields, scope));
}

/// Rejects everything outside the core calculus: `int`/`string`,
/// operators, `print`, methods with other than one parameter, locals,
/// identifiers used as receivers or assigned, and parameters named like
/// fields. `Main.main()` keeps its empty parameter list.
pub fn check_strict_core(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let strict = |span: Span, msg: String| err(codes::STRICT_CORE, span, msg);
    let bad_type = |t: &Type| matches!(t, Type::Int | Type::Str);
    for c in &p.classes {
        for f in &c.fields {
            if bad_type(&f.ty) {
                out.push(strict(
                    f.span,
                    format!("field {} uses an extension type", f.name),
                ));
            }
        }
        for m in &c.methods {
            check_strict_method(c, m, &mut out);
        }
    }
    let _ = bad_type;
    out
}

fn check_strict_method(c: &ClassDecl, m: &MethodDecl, out: &mut Vec<Diagnostic>) {
    let strict = |span: Span, msg: String| err(codes::STRICT_CORE, span, msg);
    let is_main = c.name == MAIN_CLASS && m.name == MAIN_METHOD;
    if m.params.len() != 1 && !is_main {
        out.push(strict(
            m.span,
            format!("method {} must take exactly one parameter", m.name),
        ));
    }
    if matches!(m.ret, Type::Int | Type::Str) {
        out.push(strict(
            m.span,
            format!("method {} returns an extension type", m.name),
        ));
    }
    for p in &m.params {
        if matches!(p.ty, Type::Int | Type::Str) {
            out.push(strict(
                p.span,
                format!("parameter {} has an extension type", p.name),
            ));
        }
        if c.field(&p.name).is_some() {
            out.push(strict(
                p.span,
                format!("parameter {} shadows a field", p.name),
            ));
        }
    }
    m.body.walk(&mut |e| {
        let msg = match &e.kind {
            ExprKind::Value(crate::ast::Value::Int(_) | crate::ast::Value::Str(_)) => {
                Some("integer and string literals")
            }
            ExprKind::BinOp(..) => Some("operators"),
            ExprKind::Print(_) => Some("print"),
            ExprKind::Let(..) => Some("local variable declarations"),
            ExprKind::Assign(Place::Ident(_), _) => Some("assignment to parameters"),
            ExprKind::Call(Receiver::Place(Place::Ident(_)), _, _) => Some("calls on parameters"),
            _ => None,
        };
        if let Some(what) = msg {
            out.push(strict(
                e.span,
                format!("{what} are not part of the core language"),
            ));
        }
    });
}
