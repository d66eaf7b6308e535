//! Shared helpers: corpus loading, a random usage generator and a
//! bounded-simulation oracle for usage subtyping.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mool::ast::Program;
use mool::parser::parse_program;
use mool::usage::{Qualifier, Usage, VariantRule};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn programs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("programs")
}

/// The well-typed corpus, by file name.
pub const CORPUS: &[&str] = &[
    "auction.mool",
    "counter.mool",
    "counter_unsync.mool",
    "holder.mool",
    "selling.mool",
    "trivial.mool",
];

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn load(name: &str) -> Program {
    let path = programs_dir().join(name);
    parse_program(&read(&path)).unwrap_or_else(|ds| {
        let msgs: Vec<String> = ds.iter().map(|d| d.render(name)).collect();
        panic!("{}", msgs.join("\n"))
    })
}

/// Mutants with the diagnostic code each must produce, read from the
/// `// expect: CODE` header line.
pub fn mutants() -> Vec<(PathBuf, String)> {
    let mut out: Vec<(PathBuf, String)> = std::fs::read_dir(programs_dir().join("mutants"))
        .expect("mutants dir")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "mool"))
        .map(|p| {
            let src = read(&p);
            let code = src
                .lines()
                .find_map(|l| l.trim().strip_prefix("// expect:"))
                .unwrap_or_else(|| panic!("{} has no expect line", p.display()))
                .trim()
                .to_string();
            (p, code)
        })
        .collect();
    out.sort();
    out
}

const LABELS: &[&str] = &["a", "b", "c"];

/// Random closed contractive usage with exactly `size` constructors.
pub fn gen_usage(rng: &mut impl Rng, size: usize) -> Usage {
    gen(rng, size, &mut Vec::new(), &mut 0)
}

/// `vars` holds bound names and whether a branch or variant has been
/// passed since each binder.
fn gen(rng: &mut impl Rng, size: usize, vars: &mut Vec<(String, bool)>, fresh: &mut u32) -> Usage {
    let q = if rng.gen_bool(0.5) {
        Qualifier::Lin
    } else {
        Qualifier::Un
    };
    let guarded: Vec<String> = vars
        .iter()
        .filter(|(_, g)| *g)
        .map(|(x, _)| x.clone())
        .collect();
    if size <= 1 {
        return match guarded.choose(rng) {
            Some(x) if rng.gen_bool(0.5) => Usage::var(x.clone()),
            _ => Usage::Branch(q, Vec::new()),
        };
    }
    let guard = |vars: &mut Vec<(String, bool)>| {
        let saved: Vec<bool> = vars.iter().map(|(_, g)| *g).collect();
        vars.iter_mut().for_each(|(_, g)| *g = true);
        saved
    };
    let restore = |vars: &mut Vec<(String, bool)>, saved: Vec<bool>| {
        vars.iter_mut().zip(saved).for_each(|((_, g), s)| *g = s);
    };
    match rng.gen_range(0..3) {
        0 if size >= 3 => {
            let left = rng.gen_range(1..size - 1);
            let saved = guard(vars);
            let t = gen(rng, left, vars, fresh);
            let f = gen(rng, size - 1 - left, vars, fresh);
            restore(vars, saved);
            Usage::variant(t, f)
        }
        1 => {
            *fresh += 1;
            let x = format!("X{fresh}");
            vars.push((x.clone(), false));
            let body = gen(rng, size - 1, vars, fresh);
            vars.pop();
            Usage::rec(x, body)
        }
        _ => {
            let mut labels: Vec<&str> = LABELS.to_vec();
            labels.shuffle(rng);
            let k = rng.gen_range(1..=labels.len().min(size - 1));
            let mut budget = size - 1;
            let saved = guard(vars);
            let mut entries = Vec::new();
            for (i, l) in labels.into_iter().take(k).enumerate() {
                let rest = k - i - 1;
                let n = if rest == 0 {
                    budget
                } else {
                    rng.gen_range(1..=budget - rest)
                };
                budget -= n;
                entries.push((l.to_string(), gen(rng, n, vars, fresh)));
            }
            restore(vars, saved);
            Usage::Branch(q, entries)
        }
    }
}

/// Random usage of size between 1 and `max`.
pub fn gen_usage_upto(rng: &mut impl Rng, max: usize) -> Usage {
    let n = rng.gen_range(1..=max);
    gen_usage(rng, n)
}

/// Unfolds `depth` levels of both usages and compares them with the
/// subtyping rules, accepting whatever lies below the horizon.
pub fn simulates(u: &Usage, v: &Usage, depth: u32, rule: VariantRule) -> bool {
    if depth == 0 {
        return true;
    }
    let d = depth - 1;
    match (u.unfold(), v.unfold()) {
        (Usage::Variant(t1, f1), Usage::Variant(t2, f2)) => {
            simulates(&t1, &t2, d, rule) && simulates(&f1, &f2, d, rule)
        }
        (_, Usage::Variant(t2, f2)) => match rule {
            VariantRule::Verbatim => simulates(&t2, u, d, rule) || simulates(&f2, u, d, rule),
            VariantRule::Conventional => simulates(u, &t2, d, rule) || simulates(u, &f2, d, rule),
        },
        (Usage::Branch(q1, sub), Usage::Branch(q2, sup)) => {
            q1 == q2
                && sup.iter().all(|(l, s2)| {
                    sub.iter()
                        .find(|(m, _)| m == l)
                        .is_some_and(|(_, s1)| simulates(s1, s2, d, rule))
                })
        }
        _ => false,
    }
}
