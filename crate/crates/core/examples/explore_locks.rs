//! Explores every interleaving of a program, watching `Counter.inc` for
//! overlapping activations and checking that no increment is lost.
//!
//! `cargo run --example explore_locks -- programs/counter_unsync.mool`

use mool::ast::Value;
use mool::parser::parse_program;
use mool::runtime::{explore, ExploreOptions};

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "programs/counter.mool".into());
    let src = std::fs::read_to_string(&path).expect("readable program");
    let prog = parse_program(&src).unwrap_or_else(|ds| {
        ds.iter().for_each(|d| eprintln!("{}", d.render(&path)));
        std::process::exit(1)
    });
    let opts = ExploreOptions {
        max_states: 10_000,
        watch: vec![("Counter".into(), "inc".into())],
        terminal: Some(Box::new(|s| {
            s.heap
                .iter()
                .filter(|r| r.class == "Counter")
                .find(|r| r.fields.get("n") != Some(&Value::Int(2)))
                .map(|r| format!("lost update: Counter.n = {}", r.fields["n"]))
        })),
        reduce: true,
    };
    let r = explore(&prog, &opts);
    println!(
        "{} states, {} transitions, {} terminal, {} branching{}",
        r.states,
        r.transitions,
        r.terminal_states,
        r.branching_states,
        if r.exhausted {
            ", budget exhausted"
        } else {
            ""
        }
    );
    for v in &r.violations {
        println!(
            "{}: {} after schedule {:?}",
            v.kind.code(),
            v.kind,
            v.schedule
        );
    }
    if r.violations.is_empty() {
        println!("no violations");
    }
}
