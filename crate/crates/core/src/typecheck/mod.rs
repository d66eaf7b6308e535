//! Static checking. Each class is checked by walking its usage: every
//! method is typed in the field environment reached by the calls that
//! precede it, so a protocol violation inside the class (a field left
//! linear, a parameter not used to the end) is found without looking at
//! clients.

mod env;
mod expr;

use std::collections::{HashMap, HashSet};

use crate::ast::{ClassDecl, Expr, Program, Type};
use crate::diagnostics::{codes, Diagnostic};
use crate::usage::{subtype_usage_with, Usage, VariantRule};

pub use env::{env_sub, join_env, sigma_sub, Binding, Env, Key, Sigma};
pub use expr::Checker;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Options {
    pub strict_core: bool,
    pub variant_rule: VariantRule,
}

/// `t <: t'`: base types are related to themselves, object types of the
/// same class follow their usages.
pub fn subtype(t: &Type, t2: &Type) -> bool {
    subtype_with(t, t2, VariantRule::Verbatim)
}

pub fn subtype_with(t: &Type, t2: &Type, rule: VariantRule) -> bool {
    match (t, t2) {
        (Type::Object(c, u), Type::Object(c2, u2)) => c == c2 && subtype_usage_with(u, u2, rule),
        _ => t == t2,
    }
}

pub fn check_program(p: &Program) -> Vec<Diagnostic> {
    check_program_with(p, &Options::default())
}

pub fn check_program_with(p: &Program, opts: &Options) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if opts.strict_core {
        out.extend(crate::parser::check_strict_core(p));
    }
    for c in &p.classes {
        out.extend(check_class(p, c, opts));
    }
    out
}

/// The field environment a class starts from: object fields are not yet
/// assigned, the others hold their default values.
pub fn initial_sigma(c: &ClassDecl) -> Sigma {
    c.fields
        .iter()
        .map(|f| {
            let b = if f.ty.is_object() {
                Binding::Unassigned
            } else {
                Binding::Ty(f.ty.clone())
            };
            (Key::Field(f.name.clone()), b)
        })
        .collect()
}

/// Fields at their declared types, as seen by methods outside the usage.
pub fn declared_sigma(c: &ClassDecl) -> Sigma {
    c.fields
        .iter()
        .map(|f| (Key::Field(f.name.clone()), Binding::Ty(f.ty.clone())))
        .collect()
}

pub fn check_class(p: &Program, c: &ClassDecl, opts: &Options) -> Vec<Diagnostic> {
    let mut uc = UsageChecker {
        prog: p,
        class: c,
        opts: *opts,
        theta: HashMap::new(),
        diags: Vec::new(),
    };
    let end = uc.usage(&HashMap::new(), Env::Flat(initial_sigma(c)), &c.usage);
    if let Some(end) = end {
        let mut bad = None;
        env::all_flat(&end, &mut |s| {
            if let Some((k, b)) = s.iter().find(|(_, b)| !b.is_un()) {
                bad.get_or_insert_with(|| format!("{k}: {b}"));
            }
            true
        });
        if let Some(what) = bad {
            uc.diags.push(Diagnostic::error(
                codes::LIN_FIELD_AT_END,
                c.span,
                format!(
                    "class {} can finish its protocol with a linear field ({what})",
                    c.name
                ),
            ));
        }
    }
    let visible = c.usage_methods();
    for m in &c.methods {
        if visible.contains(&m.name) {
            continue;
        }
        let start = declared_sigma(c);
        let mut ck = Checker::new(p, c, *opts);
        let r = uc.method_body(&mut ck, start.clone(), m, false).and_then(|env| {
            let ok = env::all_flat(&env, &mut |s| sigma_sub(s, &start, opts.variant_rule) && sigma_sub(&start, s, opts.variant_rule));
            if ok {
                Ok(())
            } else {
                Err(Diagnostic::error(
                    codes::NON_USAGE_ALTERS,
                    m.span,
                    format!(
                        "{} is not in the usage of {}, so it must leave the fields as declared; it ends with {env}",
                        m.name, c.name
                    ),
                ))
            }
        });
        if let Err(d) = r {
            uc.diags.push(d);
        }
    }
    let mut seen = HashSet::new();
    uc.diags
        .into_iter()
        .filter(|d| seen.insert((d.code, d.message.clone(), format!("{:?}", d.span))))
        .collect()
}

/// Recursion variables in scope: name to the recursive term that binds it.
type Vars = HashMap<String, Usage>;

struct UsageChecker<'p> {
    prog: &'p Program,
    class: &'p ClassDecl,
    opts: Options,
    /// Visited recursive usages and the environment they were entered with.
    theta: HashMap<Usage, Env>,
    diags: Vec<Diagnostic>,
}

impl<'p> UsageChecker<'p> {
    fn sub_env(&self, a: &Env, b: &Env) -> bool {
        env_sub(a, b, self.opts.variant_rule)
    }

    /// `Θ; Γ ⊢_C u ⊣ Γ'`. Errors are recorded; `None` means checking could
    /// not continue past them.
    fn usage(&mut self, vars: &Vars, env: Env, u: &Usage) -> Option<Env> {
        if env == Env::Any {
            return Some(Env::Any);
        }
        match u {
            Usage::Branch(q, entries) => self.branch(vars, env, *q, entries),
            Usage::Variant(t, f) => {
                let (l, r) = env::sides(&env);
                let el = self.usage(vars, l, t)?;
                let er = self.usage(vars, r, f)?;
                match join_env(&el, &er, self.opts.variant_rule) {
                    Some(j) => Some(j),
                    None => {
                        self.diags.push(Diagnostic::error(
                            codes::VARIANT_ENV_MISMATCH,
                            self.class.span,
                            format!(
                                "the two sides of «{t} + {f}» in class {} end in different environments: {el} and {er}",
                                self.class.name
                            ),
                        ));
                        None
                    }
                }
            }
            Usage::Var(x) => {
                let rec = vars.get(x)?;
                let key = rec.normalize();
                self.revisit(&key, &env, u)
            }
            Usage::Rec(x, body) => {
                let key = u.normalize();
                if self.theta.contains_key(&key) {
                    return self.revisit(&key, &env, u);
                }
                self.theta.insert(key, env.clone());
                let mut vars = vars.clone();
                vars.insert(x.clone(), u.clone());
                self.usage(&vars, env, body)
            }
        }
    }

    /// T-UsageVar: coming back to a recursive usage requires an environment
    /// that fits the one it was first entered with.
    fn revisit(&mut self, key: &Usage, env: &Env, u: &Usage) -> Option<Env> {
        let stored = self.theta.get(key)?.clone();
        if self.sub_env(env, &stored) {
            Some(Env::Any)
        } else {
            self.diags.push(Diagnostic::error(
                codes::REC_ENV_MISMATCH,
                self.class.span,
                format!(
                    "in class {}, returning to {u} with {env} but it was entered with {stored}",
                    self.class.name
                ),
            ));
            None
        }
    }

    fn head(&self, vars: &Vars, u: &Usage) -> Usage {
        match u.unfold() {
            Usage::Var(x) => match vars.get(&x) {
                Some(rec) => rec.unfold(),
                None => Usage::Var(x),
            },
            other => other,
        }
    }

    /// T-Branch.
    fn branch(
        &mut self,
        vars: &Vars,
        env: Env,
        q: crate::usage::Qualifier,
        entries: &[(String, Usage)],
    ) -> Option<Env> {
        let Env::Flat(sigma) = env else {
            self.diags.push(Diagnostic::error(
                codes::USAGE_ENV_MISMATCH,
                self.class.span,
                format!(
                    "class {}: a branch is reached with a split environment {env}; the preceding method needs a variant",
                    self.class.name
                ),
            ));
            return None;
        };
        // `end` is judged by the final-environment check instead.
        if q == crate::usage::Qualifier::Un && !entries.is_empty() {
            if let Some((k, b)) = sigma.iter().find(|(_, b)| !b.is_un()) {
                self.diags.push(Diagnostic::error(
                    codes::UN_BRANCH_LIN_FIELD,
                    self.class.span,
                    format!(
                        "class {} is shared at {} while field {k} is linear ({b})",
                        self.class.name,
                        crate::ast::pretty_usage(&Usage::Branch(q, entries.to_vec()))
                    ),
                ));
                return None;
            }
        }
        if entries.is_empty() {
            return Some(Env::Flat(sigma));
        }
        let mut result: Option<Env> = None;
        let mut failed = false;
        for (m, cont) in entries {
            let Some(decl) = self.class.method(m) else {
                self.diags.push(Diagnostic::error(
                    codes::UNDECLARED_METHOD,
                    self.class.span,
                    format!("method {m} not declared in class {}", self.class.name),
                ));
                failed = true;
                continue;
            };
            let variant = matches!(self.head(vars, cont), Usage::Variant(..));
            let mut ck = Checker::new(self.prog, self.class, self.opts);
            let after = match self.method_body(&mut ck, sigma.clone(), decl, variant) {
                Ok(e) => e,
                Err(d) => {
                    self.diags.push(d);
                    failed = true;
                    continue;
                }
            };
            let Some(end) = self.usage(vars, after, cont) else {
                failed = true;
                continue;
            };
            result = match result {
                None => Some(end),
                Some(prev) => match join_env(&prev, &end, self.opts.variant_rule) {
                    Some(j) => Some(j),
                    None => {
                        self.diags.push(Diagnostic::error(
                            codes::USAGE_ENV_MISMATCH,
                            decl.span,
                            format!(
                                "after {m} class {} ends in {end}, but another choice ends in {prev}",
                                self.class.name
                            ),
                        ));
                        failed = true;
                        Some(prev)
                    }
                },
            };
        }
        if failed {
            None
        } else {
            result
        }
    }

    /// Types one method body from `sigma` and returns the environment with
    /// parameters removed.
    fn method_body(
        &self,
        ck: &mut Checker<'p>,
        mut sigma: Sigma,
        m: &crate::ast::MethodDecl,
        variant: bool,
    ) -> Result<Env, Diagnostic> {
        for p in &m.params {
            sigma.insert(Key::Ident(p.name.clone()), Binding::Ty(p.ty.clone()));
            ck.idents.push((p.name.clone(), p.ty.clone()));
        }
        let (t, env) = if variant {
            if m.ret != Type::Boolean {
                return Err(Diagnostic::error(
                    codes::NOT_BOOLEAN_VARIANT,
                    m.span,
                    format!(
                        "{} is followed by a variant in the usage but returns {}",
                        m.name, m.ret
                    ),
                ));
            }
            ck.tail(sigma, &m.body)?
        } else {
            let (t, s) = ck.expr(sigma, &m.body)?;
            (t, Env::Flat(s))
        };
        if !subtype_with(&t, &m.ret, self.opts.variant_rule) {
            return Err(Diagnostic::error(
                codes::TYPE_MISMATCH,
                m.body.span,
                format!("{} returns {t}, declared {}", m.name, m.ret),
            ));
        }
        let body: &Expr = &m.body;
        env::map_flat(env, &mut |mut s| {
            for p in &m.params {
                s = ck.drop_ident(s, &p.name, body)?;
            }
            Ok(s)
        })
    }
}
