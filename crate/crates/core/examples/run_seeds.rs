//! Runs a program under a range of scheduler seeds and summarizes the outcomes.
//!
//! `cargo run --example run_seeds -- programs/counter_unsync.mool 200`

use std::collections::BTreeMap;
use std::time::Instant;

use mool::parser::parse_program;
use mool::runtime::run;

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| "programs/auction.mool".into());
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let src = std::fs::read_to_string(&path).expect("readable program");
    let prog = match parse_program(&src) {
        Ok(p) => p,
        Err(ds) => {
            for d in ds {
                eprintln!("{}", d.render(&path));
            }
            std::process::exit(1);
        }
    };
    let start = Instant::now();
    let mut outcomes: BTreeMap<String, u64> = BTreeMap::new();
    let mut steps = 0;
    for seed in 0..seeds {
        let r = run(&prog, seed, 1_000_000);
        steps += r.steps;
        let key = match &r.error {
            None => format!("ok, output {:?}", r.output),
            Some(e) => format!("{}: {e}", e.code()),
        };
        *outcomes.entry(key).or_default() += 1;
    }
    for (k, n) in &outcomes {
        println!("{n:>5}  {k}");
    }
    println!("{seeds} seeds, {steps} steps, {:?}", start.elapsed());
}
