//! Usage types: the protocol algebra attached to every class.
//!
//! A usage is a branch `q{m_i.u_i}` of available methods, a variant
//! `«u + u»` selected by the boolean result of the preceding call, a
//! recursion variable, or a recursive type `mu X.u`. Recursive types are
//! equi-recursive: `mu X.u` and its unrolling are interchangeable.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Aliasing status of an object at a protocol point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Qualifier {
    Lin,
    Un,
}

impl Qualifier {
    /// The `q ⊂ q'` ordering: reflexive, with `lin ⊂ un`.
    pub fn is_sub(self, other: Qualifier) -> bool {
        self == other || (self == Qualifier::Lin && other == Qualifier::Un)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Qualifier::Lin => "lin",
            Qualifier::Un => "un",
        }
    }
}

impl fmt::Display for Qualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Usage {
    /// `q{m_i . u_i}`; entries keep declaration order and labels are unique.
    Branch(Qualifier, Vec<(String, Usage)>),
    /// `«u_true + u_false»`.
    Variant(Box<Usage>, Box<Usage>),
    Var(String),
    Rec(String, Box<Usage>),
}

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::ast::pretty_usage(self))
    }
}

/// How `u <: «u' + u''»` is decided when `u` is not itself a variant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantRule {
    /// `u' <: u` or `u'' <: u`, exactly as the rule is written.
    #[default]
    Verbatim,
    /// `u <: u'` or `u <: u''`.
    Conventional,
}

impl std::str::FromStr for VariantRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verbatim" => Ok(VariantRule::Verbatim),
            "conventional" => Ok(VariantRule::Conventional),
            other => Err(format!("unknown variant subtyping rule `{other}`")),
        }
    }
}

impl Usage {
    /// `end`, i.e. `un{}`.
    pub fn end() -> Usage {
        Usage::Branch(Qualifier::Un, Vec::new())
    }

    pub fn branch<I, S>(q: Qualifier, entries: I) -> Usage
    where
        I: IntoIterator<Item = (S, Usage)>,
        S: Into<String>,
    {
        Usage::Branch(q, entries.into_iter().map(|(l, u)| (l.into(), u)).collect())
    }

    pub fn variant(t: Usage, f: Usage) -> Usage {
        Usage::Variant(Box::new(t), Box::new(f))
    }

    pub fn rec(x: impl Into<String>, body: Usage) -> Usage {
        Usage::Rec(x.into(), Box::new(body))
    }

    pub fn var(x: impl Into<String>) -> Usage {
        Usage::Var(x.into())
    }

    /// `*{m1 + ... + mk}`: `mu X.un{m1.X, ..., mk.X}`, or `end` when empty.
    pub fn star<I, S>(labels: I) -> Usage
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entries: Vec<(String, Usage)> = labels
            .into_iter()
            .map(|l| (l.into(), Usage::var("X")))
            .collect();
        if entries.is_empty() {
            Usage::end()
        } else {
            Usage::rec("X", Usage::Branch(Qualifier::Un, entries))
        }
    }

    pub fn is_end(&self) -> bool {
        matches!(self, Usage::Branch(Qualifier::Un, e) if e.is_empty())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Usage::Branch(_, entries) => {
                for (_, u) in entries {
                    u.collect_free(bound, out);
                }
            }
            Usage::Variant(t, f) => {
                t.collect_free(bound, out);
                f.collect_free(bound, out);
            }
            Usage::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            Usage::Rec(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Every method label mentioned anywhere in the term.
    pub fn labels(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut BTreeSet<String>) {
        match self {
            Usage::Branch(_, entries) => {
                for (l, u) in entries {
                    out.insert(l.clone());
                    u.collect_labels(out);
                }
            }
            Usage::Variant(t, f) => {
                t.collect_labels(out);
                f.collect_labels(out);
            }
            Usage::Var(_) => {}
            Usage::Rec(_, body) => body.collect_labels(out),
        }
    }

    /// Capture-avoiding substitution `self[replacement / x]`.
    pub fn subst(&self, x: &str, replacement: &Usage) -> Usage {
        let fv = replacement.free_vars();
        self.subst_inner(x, replacement, &fv)
    }

    fn subst_inner(&self, x: &str, rep: &Usage, rep_fv: &BTreeSet<String>) -> Usage {
        match self {
            Usage::Branch(q, entries) => Usage::Branch(
                *q,
                entries
                    .iter()
                    .map(|(l, u)| (l.clone(), u.subst_inner(x, rep, rep_fv)))
                    .collect(),
            ),
            Usage::Variant(t, f) => {
                Usage::variant(t.subst_inner(x, rep, rep_fv), f.subst_inner(x, rep, rep_fv))
            }
            Usage::Var(y) if y == x => rep.clone(),
            Usage::Var(_) => self.clone(),
            Usage::Rec(y, _) if y == x => self.clone(),
            Usage::Rec(y, body) => {
                if rep_fv.contains(y) {
                    let mut avoid = rep_fv.clone();
                    avoid.extend(body.free_vars());
                    avoid.insert(x.to_string());
                    let fresh = fresh_name(y, &avoid);
                    let renamed = body.subst(y, &Usage::Var(fresh.clone()));
                    Usage::rec(fresh, renamed.subst_inner(x, rep, rep_fv))
                } else {
                    Usage::rec(y.clone(), body.subst_inner(x, rep, rep_fv))
                }
            }
        }
    }

    /// Unrolls top-level `mu` binders until the head is a branch, a variant
    /// or a free variable. Terminates on contractive input.
    pub fn unfold(&self) -> Usage {
        let mut cur = self.clone();
        while let Usage::Rec(x, body) = &cur {
            cur = body.subst(x, &cur);
        }
        cur
    }

    /// No subterm of the form `mu X1. ... mu Xn. X1`.
    pub fn is_contractive(&self) -> bool {
        match self {
            Usage::Branch(_, entries) => entries.iter().all(|(_, u)| u.is_contractive()),
            Usage::Variant(t, f) => t.is_contractive() && f.is_contractive(),
            Usage::Var(_) => true,
            Usage::Rec(..) => {
                let mut chain = Vec::new();
                let mut cur = self;
                while let Usage::Rec(x, body) = cur {
                    chain.push(x.as_str());
                    cur = body;
                }
                if let Usage::Var(y) = cur {
                    if chain.contains(&y.as_str()) {
                        return false;
                    }
                }
                cur.is_contractive()
            }
        }
    }

    /// Status of the usage: a branch carries its own qualifier, a variant is
    /// always linear. Open heads are treated as linear.
    pub fn qualifier(&self) -> Qualifier {
        match self.unfold() {
            Usage::Branch(q, _) => q,
            _ => Qualifier::Lin,
        }
    }

    /// Canonical representative of the alpha-equivalence class: binders are
    /// renamed by nesting depth and branch entries are sorted by label.
    pub fn normalize(&self) -> Usage {
        let mut scope = Vec::new();
        self.normalize_in(&mut scope)
    }

    fn normalize_in(&self, scope: &mut Vec<String>) -> Usage {
        match self {
            Usage::Branch(q, entries) => {
                let mut es: Vec<(String, Usage)> = entries
                    .iter()
                    .map(|(l, u)| (l.clone(), u.normalize_in(scope)))
                    .collect();
                es.sort_by(|a, b| a.0.cmp(&b.0));
                Usage::Branch(*q, es)
            }
            Usage::Variant(t, f) => Usage::variant(t.normalize_in(scope), f.normalize_in(scope)),
            Usage::Var(x) => match scope.iter().rposition(|b| b == x) {
                Some(level) => Usage::Var(format!("#{level}")),
                None => self.clone(),
            },
            Usage::Rec(x, body) => {
                let level = scope.len();
                scope.push(x.clone());
                let b = body.normalize_in(scope);
                scope.pop();
                Usage::rec(format!("#{level}"), b)
            }
        }
    }

    pub fn alpha_eq(&self, other: &Usage) -> bool {
        self.normalize() == other.normalize()
    }

    /// Number of constructors in the term.
    pub fn size(&self) -> usize {
        match self {
            Usage::Branch(_, entries) => 1 + entries.iter().map(|(_, u)| u.size()).sum::<usize>(),
            Usage::Variant(t, f) => 1 + t.size() + f.size(),
            Usage::Var(_) => 1,
            Usage::Rec(_, b) => 1 + b.size(),
        }
    }

    /// The continuation after calling `method` on an object at this usage,
    /// if the unfolded head is a branch offering it.
    pub fn after_call(&self, method: &str) -> Option<Usage> {
        match self.unfold() {
            Usage::Branch(_, entries) => entries
                .into_iter()
                .find(|(l, _)| l == method)
                .map(|(_, u)| u),
            _ => None,
        }
    }
}

fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded name supply")
}

/// Variables not bound by an enclosing `mu`.
pub fn free_usage_vars(u: &Usage) -> BTreeSet<String> {
    u.free_vars()
}

pub fn unfold(u: &Usage) -> Usage {
    u.unfold()
}

pub fn is_contractive(u: &Usage) -> bool {
    u.is_contractive()
}

pub fn qualifier_of(u: &Usage) -> Qualifier {
    u.qualifier()
}

/// Coinductive usage subtyping with the default (verbatim) variant rule.
pub fn subtype_usage(u: &Usage, v: &Usage) -> bool {
    subtype_usage_with(u, v, VariantRule::Verbatim)
}

pub fn subtype_usage_with(u: &Usage, v: &Usage, rule: VariantRule) -> bool {
    let mut sub = Subtyping {
        rule,
        assumed: HashSet::new(),
        log: Vec::new(),
    };
    sub.check(u, v)
}

/// Assume-and-check state. Assumptions made while exploring a pair that
/// turns out not to hold are rolled back, so a failed disjunct never
/// justifies anything later.
struct Subtyping {
    rule: VariantRule,
    assumed: HashSet<(Usage, Usage)>,
    log: Vec<(Usage, Usage)>,
}

impl Subtyping {
    fn check(&mut self, u: &Usage, v: &Usage) -> bool {
        let key = (u.normalize(), v.normalize());
        if self.assumed.contains(&key) {
            return true;
        }
        let mark = self.log.len();
        self.assumed.insert(key.clone());
        self.log.push(key);
        let ok = self.heads(&u.unfold(), &v.unfold());
        if !ok {
            for k in self.log.drain(mark..) {
                self.assumed.remove(&k);
            }
        }
        ok
    }

    fn heads(&mut self, u: &Usage, v: &Usage) -> bool {
        match (u, v) {
            (Usage::Variant(t1, f1), Usage::Variant(t2, f2)) => {
                self.check(t1, t2) && self.check(f1, f2)
            }
            (_, Usage::Variant(t2, f2)) => match self.rule {
                VariantRule::Verbatim => self.check(t2, u) || self.check(f2, u),
                VariantRule::Conventional => self.check(u, t2) || self.check(u, f2),
            },
            (Usage::Branch(q1, sub_entries), Usage::Branch(q2, sup_entries)) => {
                q1 == q2
                    && sup_entries.iter().all(|(label, sup)| {
                        sub_entries
                            .iter()
                            .find(|(l, _)| l == label)
                            .is_some_and(|(_, s)| self.check(s, sup))
                    })
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Qualifier::*;

    fn lin1(m: &str, u: Usage) -> Usage {
        Usage::branch(Lin, [(m, u)])
    }

    #[test]
    fn free_vars_respect_binders() {
        let bound = Usage::rec("X", Usage::branch(Un, [("m", Usage::var("X"))]));
        assert!(free_usage_vars(&bound).is_empty());
        assert_eq!(
            free_usage_vars(&Usage::var("X")),
            BTreeSet::from(["X".to_string()])
        );
        let open = Usage::rec("X", Usage::branch(Un, [("m", Usage::var("Y"))]));
        assert_eq!(free_usage_vars(&open), BTreeSet::from(["Y".to_string()]));
    }

    #[test]
    fn unfold_examples() {
        let body = Usage::branch(
            Un,
            [("selling", Usage::var("X")), ("bidding", Usage::var("X"))],
        );
        let rec = Usage::rec("X", body);
        let expected = Usage::branch(Un, [("selling", rec.clone()), ("bidding", rec.clone())]);
        assert_eq!(unfold(&rec), expected);

        assert_eq!(unfold(&Usage::end()), Usage::end());

        let inner = Usage::rec("Y", Usage::branch(Un, [("m", Usage::var("Y"))]));
        let double = Usage::rec("X", inner.clone());
        assert_eq!(unfold(&double), Usage::branch(Un, [("m", inner)]));
    }

    #[test]
    fn contractiveness() {
        assert!(!is_contractive(&Usage::rec("X", Usage::var("X"))));
        assert!(is_contractive(&Usage::rec(
            "X",
            Usage::branch(Un, [("m", Usage::var("X"))])
        )));
        assert!(!is_contractive(&Usage::rec(
            "X",
            Usage::rec("Y", Usage::var("X"))
        )));
        assert!(!is_contractive(&Usage::rec(
            "Z",
            Usage::branch(Lin, [("a", Usage::rec("X", Usage::var("X")))])
        )));
    }

    #[test]
    fn qualifiers() {
        assert_eq!(
            qualifier_of(&Usage::variant(Usage::end(), Usage::end())),
            Lin
        );
        assert_eq!(qualifier_of(&Usage::end()), Un);
        assert_eq!(qualifier_of(&Usage::star(["m"])), Un);
        assert!(Lin.is_sub(Un) && Lin.is_sub(Lin) && !Un.is_sub(Lin));
    }

    #[test]
    fn capture_avoiding_substitution() {
        // (mu Y. lin{a.X}) [Y / X] must not capture the free Y.
        let u = Usage::rec("Y", lin1("a", Usage::var("X")));
        let s = u.subst("X", &Usage::var("Y"));
        assert_eq!(s.free_vars(), BTreeSet::from(["Y".to_string()]));
    }

    #[test]
    fn width_subtyping() {
        let wide = Usage::branch(Lin, [("a", Usage::end()), ("b", Usage::end())]);
        let narrow = Usage::branch(Lin, [("a", Usage::end())]);
        assert!(subtype_usage(&wide, &narrow));
        assert!(!subtype_usage(&narrow, &wide));
    }

    #[test]
    fn equi_recursive_subtyping() {
        let rec = Usage::rec("X", Usage::branch(Un, [("m", Usage::var("X"))]));
        let unrolled = Usage::branch(Un, [("m", rec.clone())]);
        assert!(subtype_usage(&rec, &unrolled));
        assert!(subtype_usage(&unrolled, &rec));
    }

    #[test]
    fn qualifiers_must_match_in_branches() {
        assert!(!subtype_usage(
            &Usage::branch(Lin, Vec::<(String, Usage)>::new()),
            &Usage::end()
        ));
    }

    #[test]
    fn alpha_equivalence() {
        let a = Usage::rec("X", Usage::branch(Un, [("m", Usage::var("X"))]));
        let b = Usage::rec("Q", Usage::branch(Un, [("m", Usage::var("Q"))]));
        assert!(a.alpha_eq(&b));
        assert_ne!(a, b);
    }

    #[test]
    fn variant_rule_directions() {
        let big = Usage::branch(Lin, [("a", Usage::end()), ("b", Usage::end())]);
        let small = Usage::branch(Lin, [("a", Usage::end())]);
        let v = Usage::variant(big.clone(), Usage::end());
        // verbatim: small <: «big + end» because big <: small
        assert!(subtype_usage_with(&small, &v, VariantRule::Verbatim));
        assert!(!subtype_usage_with(&small, &v, VariantRule::Conventional));
        // conventional: big <: «big + end» because big <: big
        assert!(subtype_usage_with(&big, &v, VariantRule::Conventional));
    }
}
