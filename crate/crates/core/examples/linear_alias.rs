//! Explores every interleaving of a program and reports any linear object
//! that is reachable from two places at once.
//!
//! `cargo run --example linear_alias -- programs/selling.mool`

use mool::parser::parse_program;
use mool::runtime::{explore, ExploreOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| "programs/selling.mool".into());
    let max_states = args.next().and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let src = std::fs::read_to_string(&path).expect("readable program");
    let prog = parse_program(&src).unwrap_or_else(|ds| {
        ds.iter().for_each(|d| eprintln!("{}", d.render(&path)));
        std::process::exit(1)
    });
    let r = explore(
        &prog,
        &ExploreOptions {
            max_states,
            ..ExploreOptions::default()
        },
    );
    println!(
        "{} states, {} terminal{}",
        r.states,
        r.terminal_states,
        if r.exhausted {
            ", budget exhausted"
        } else {
            ""
        }
    );
    for v in &r.violations {
        println!("{}: {}", v.kind.code(), v.kind);
    }
    std::process::exit(if r.ok() { 0 } else { 1 });
}
