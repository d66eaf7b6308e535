//! Typing environments: `Σ`, `Γ ::= Σ | ⟨Γ + Γ⟩`, and the unconstrained
//! environment produced by recursion variables.

use std::collections::BTreeMap;
use std::fmt;

use crate::ast::{Owner, Place, Type};
use crate::usage::VariantRule;

use super::subtype_with;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    Field(String),
    Ident(String),
}

impl Key {
    pub fn of_place(p: &Place) -> Option<Key> {
        match p {
            Place::Field(Owner::This, f) => Some(Key::Field(f.clone())),
            Place::Ident(x) => Some(Key::Ident(x.clone())),
            _ => None,
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Field(n) => write!(f, "this.{n}"),
            Key::Ident(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    Ty(Type),
    /// An object field that has not been written yet.
    Unassigned,
}

impl Binding {
    pub fn is_un(&self) -> bool {
        match self {
            Binding::Ty(t) => t.is_un(),
            Binding::Unassigned => true,
        }
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::Ty(t) => write!(f, "{t}"),
            Binding::Unassigned => f.write_str("⊥"),
        }
    }
}

pub type Sigma = BTreeMap<Key, Binding>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Env {
    Flat(Sigma),
    /// Left for `true`, right for `false`.
    Pair(Box<Env>, Box<Env>),
    /// Whatever the context needs; the result of a recursion variable.
    Any,
}

pub fn render_sigma(s: &Sigma) -> String {
    let parts: Vec<String> = s.iter().map(|(k, b)| format!("{k}: {b}")).collect();
    format!("{{{}}}", parts.join(", "))
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Env::Flat(s) => f.write_str(&render_sigma(s)),
            Env::Pair(l, r) => write!(f, "⟨{l} + {r}⟩"),
            Env::Any => f.write_str("_"),
        }
    }
}

fn binding_sub(a: &Binding, b: &Binding, rule: VariantRule) -> bool {
    match (a, b) {
        (Binding::Unassigned, Binding::Unassigned) => true,
        (Binding::Ty(x), Binding::Ty(y)) => subtype_with(x, y, rule),
        _ => false,
    }
}

/// Pointwise subtyping over the same domain.
pub fn sigma_sub(a: &Sigma, b: &Sigma, rule: VariantRule) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b.iter())
            .all(|((ka, va), (kb, vb))| ka == kb && binding_sub(va, vb, rule))
}

pub fn env_sub(a: &Env, b: &Env, rule: VariantRule) -> bool {
    match (a, b) {
        (_, Env::Any) | (Env::Any, _) => true,
        (Env::Flat(x), Env::Flat(y)) => sigma_sub(x, y, rule),
        (Env::Pair(a1, a2), Env::Pair(b1, b2)) => env_sub(a1, b1, rule) && env_sub(a2, b2, rule),
        _ => false,
    }
}

/// Least environment both sides can be weakened to, if the larger of
/// each pair of bindings exists.
pub fn join_sigma(a: &Sigma, b: &Sigma, rule: VariantRule) -> Option<Sigma> {
    if a.len() != b.len() {
        return None;
    }
    let mut out = Sigma::new();
    for ((ka, va), (kb, vb)) in a.iter().zip(b.iter()) {
        if ka != kb {
            return None;
        }
        let v = if binding_sub(va, vb, rule) {
            vb.clone()
        } else if binding_sub(vb, va, rule) {
            va.clone()
        } else {
            return None;
        };
        out.insert(ka.clone(), v);
    }
    Some(out)
}

pub fn join_env(a: &Env, b: &Env, rule: VariantRule) -> Option<Env> {
    match (a, b) {
        (Env::Any, x) | (x, Env::Any) => Some(x.clone()),
        (Env::Flat(x), Env::Flat(y)) => join_sigma(x, y, rule).map(Env::Flat),
        (Env::Pair(a1, a2), Env::Pair(b1, b2)) => Some(Env::Pair(
            Box::new(join_env(a1, b1, rule)?),
            Box::new(join_env(a2, b2, rule)?),
        )),
        _ => None,
    }
}

/// The two sides of an environment about to be split by a variant.
pub fn sides(e: &Env) -> (Env, Env) {
    match e {
        Env::Pair(l, r) => ((**l).clone(), (**r).clone()),
        other => (other.clone(), other.clone()),
    }
}

/// Applies `f` to every flat component.
pub fn map_flat<E>(e: Env, f: &mut impl FnMut(Sigma) -> Result<Sigma, E>) -> Result<Env, E> {
    Ok(match e {
        Env::Flat(s) => Env::Flat(f(s)?),
        Env::Pair(l, r) => Env::Pair(Box::new(map_flat(*l, f)?), Box::new(map_flat(*r, f)?)),
        Env::Any => Env::Any,
    })
}

pub fn all_flat(e: &Env, f: &mut impl FnMut(&Sigma) -> bool) -> bool {
    match e {
        Env::Flat(s) => f(s),
        Env::Pair(l, r) => all_flat(l, f) && all_flat(r, f),
        Env::Any => true,
    }
}
