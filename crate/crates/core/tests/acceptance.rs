//! One PASS/FAIL line per acceptance criterion. The process fails if any
//! criterion other than the known transitivity gap fails, or if that gap
//! stops looking the way the ledger describes it.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use mool::ast::Value;
use mool::parser::parse_program;
use mool::runtime::{explore, run, run_with, ExploreOptions, RunOptions};
use mool::typecheck::check_program;
use mool::usage::{subtype_usage_with, Usage, VariantRule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 100;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn corpus_runs() -> Verdict {
    let start = Instant::now();
    let mut problems = Vec::new();
    let mut runs = 0;
    for name in common::CORPUS {
        let src = common::read(&common::programs_dir().join(name));
        let p = match parse_program(&src) {
            Ok(p) => p,
            Err(ds) => {
                problems.push(format!("{name}: {} parse errors", ds.len()));
                continue;
            }
        };
        let ds = check_program(&p);
        if !ds.is_empty() {
            problems.push(format!("{name}: {} diagnostics", ds.len()));
        }
        for seed in 0..SEEDS {
            runs += 1;
            if let Some(e) = run(&p, seed, 1_000_000).error {
                problems.push(format!("{name} seed {seed}: {}", e.code()));
            }
        }
    }
    let took = start.elapsed();
    let fast = took < Duration::from_secs(5);
    verdict(
        problems.is_empty() && fast,
        format!(
            "{} programs, {runs} runs in {took:.2?}{}",
            common::CORPUS.len(),
            if problems.is_empty() {
                String::new()
            } else {
                format!("; {}", problems.join(", "))
            }
        ),
    )
}

fn mutants_rejected() -> Verdict {
    let ms = common::mutants();
    let mut wrong = Vec::new();
    for (path, code) in &ms {
        let src = common::read(path);
        let got: Vec<&str> = match parse_program(&src) {
            Ok(p) => check_program(&p).into_iter().map(|d| d.code).collect(),
            Err(ds) => ds.into_iter().map(|d| d.code).collect(),
        };
        if !got.contains(&code.as_str()) {
            wrong.push(format!("{} expected {code} got {got:?}", path.display()));
        }
    }
    verdict(
        ms.len() >= 12 && wrong.is_empty(),
        format!(
            "{} mutants{}",
            ms.len(),
            if wrong.is_empty() {
                String::new()
            } else {
                format!("; {}", wrong.join("; "))
            }
        ),
    )
}

struct Subtyping {
    reflexive_failures: usize,
    chains: usize,
    broken: usize,
    example: Option<(Usage, Usage, Usage)>,
    true_pairs: usize,
    disagreements: usize,
}

fn subtyping(rule: VariantRule) -> Subtyping {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pool: Vec<Usage> = (0..10_000)
        .map(|_| common::gen_usage_upto(&mut rng, 6))
        .collect();
    let reflexive_failures = pool
        .iter()
        .filter(|u| !subtype_usage_with(u, u, rule))
        .count();
    let (mut chains, mut broken, mut example) = (0, 0, None);
    for i in 0..pool.len() {
        let (a, b, c) = (
            &pool[i],
            &pool[(i * 7 + 1) % pool.len()],
            &pool[(i * 13 + 5) % pool.len()],
        );
        if subtype_usage_with(a, b, rule) && subtype_usage_with(b, c, rule) {
            chains += 1;
            if !subtype_usage_with(a, c, rule) {
                broken += 1;
                example.get_or_insert((a.clone(), b.clone(), c.clone()));
            }
        }
    }
    let (mut true_pairs, mut disagreements) = (0, 0);
    for _ in 0..1000 {
        let x = common::gen_usage_upto(&mut rng, 6);
        let y = common::gen_usage_upto(&mut rng, 6);
        let fast = subtype_usage_with(&x, &y, rule);
        true_pairs += usize::from(fast);
        disagreements += usize::from(fast != common::simulates(&x, &y, 8, rule));
    }
    Subtyping {
        reflexive_failures,
        chains,
        broken,
        example,
        true_pairs,
        disagreements,
    }
}

fn no_protocol_faults() -> Verdict {
    let mut bad = Vec::new();
    for name in common::CORPUS {
        let p = common::load(name);
        for seed in 0..SEEDS {
            if let Some(e) = run(&p, seed, 1_000_000).error {
                if matches!(e.code(), "E-RT-UNAVAILABLE" | "E-RT-UNINIT") {
                    bad.push(format!("{name} seed {seed}: {e}"));
                }
            }
        }
    }
    verdict(
        bad.is_empty(),
        format!(
            "{} runs, {} protocol faults",
            common::CORPUS.len() as u64 * SEEDS,
            bad.len()
        ),
    )
}

fn lock_discipline() -> Verdict {
    let opts = || ExploreOptions {
        max_states: 10_000,
        watch: vec![("Counter".into(), "inc".into())],
        terminal: Some(Box::new(|s| {
            s.heap
                .iter()
                .find(|r| r.class == "Counter" && r.fields["n"] != Value::Int(2))
                .map(|r| format!("Counter.n = {}", r.fields["n"]))
        })),
        reduce: true,
    };
    let safe = explore(&common::load("counter.mool"), &opts());
    let broken = explore(&common::load("counter_unsync.mool"), &opts());
    let codes: BTreeSet<_> = broken.violations.iter().map(|v| v.kind.code()).collect();
    verdict(
        safe.ok() && codes.contains("E-EX-OVERLAP"),
        format!(
            "synchronized: {} states, {} violations; unsynchronized: {} states, {codes:?}",
            safe.states,
            safe.violations.len(),
            broken.states
        ),
    )
}

fn linear_uniqueness() -> Verdict {
    let r = explore(
        &common::load("selling.mool"),
        &ExploreOptions {
            max_states: 1_000_000,
            ..ExploreOptions::default()
        },
    );
    let alias = r
        .violations
        .iter()
        .filter(|v| v.kind.code() == "E-EX-LINEAR-ALIAS")
        .count();
    verdict(
        r.ok(),
        format!(
            "{} states, {} terminal, {alias} aliasing violations{}",
            r.states,
            r.terminal_states,
            if r.exhausted {
                ", budget exhausted"
            } else {
                ""
            }
        ),
    )
}

fn determinism() -> Verdict {
    let mut differing = Vec::new();
    for name in common::CORPUS {
        let p = common::load(name);
        for seed in [0, 1, 7, 99] {
            let opts = RunOptions {
                seed,
                max_steps: 1_000_000,
                trace: true,
            };
            let text = || {
                run_with(&p, &opts)
                    .trace
                    .iter()
                    .map(|e| format!("{e}\n"))
                    .collect::<String>()
            };
            if text() != text() {
                differing.push(format!("{name}@{seed}"));
            }
        }
    }
    verdict(
        differing.is_empty(),
        format!(
            "{} program/seed pairs, {} differ",
            common::CORPUS.len() * 4,
            differing.len()
        ),
    )
}

fn main() {
    let mut unexpected = Vec::new();
    let mut report = |n: u32, title: &str, v: Verdict, expect_pass: bool| {
        println!(
            "{} {n} {title}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if v.pass != expect_pass {
            unexpected.push(n);
        }
    };
    report(1, "corpus", corpus_runs(), true);
    report(2, "mutants", mutants_rejected(), true);

    let verbatim = subtyping(VariantRule::Verbatim);
    let conventional = subtyping(VariantRule::Conventional);
    let example = verbatim
        .example
        .as_ref()
        .map(|(a, b, c)| format!(", e.g. {a} <: {b} <: {c}"))
        .unwrap_or_default();
    let detail = format!(
        "verbatim variant rule: reflexivity failures {}, transitivity broken in {} of {} chains{example}; oracle disagreements {} ({} true pairs). conventional rule: reflexivity failures {}, broken {} of {} chains, oracle disagreements {}",
        verbatim.reflexive_failures,
        verbatim.broken,
        verbatim.chains,
        verbatim.disagreements,
        verbatim.true_pairs,
        conventional.reflexive_failures,
        conventional.broken,
        conventional.chains,
        conventional.disagreements
    );
    let pass =
        verbatim.reflexive_failures == 0 && verbatim.broken == 0 && verbatim.disagreements == 0;
    // Known gap: only transitivity under the verbatim rule may fail.
    let gap_as_documented = verbatim.reflexive_failures == 0
        && verbatim.disagreements == 0
        && verbatim.broken > 0
        && conventional.reflexive_failures == 0
        && conventional.broken == 0
        && conventional.disagreements == 0;
    report(3, "subtyping", verdict(pass, detail), !gap_as_documented);

    report(4, "no protocol faults", no_protocol_faults(), true);
    report(5, "lock discipline", lock_discipline(), true);
    report(6, "linear uniqueness", linear_uniqueness(), true);
    report(7, "determinism", determinism(), true);

    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
