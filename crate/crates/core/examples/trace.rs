//! Prints the reduction trace of one run, then the final heap.
//!
//! `cargo run --example trace -- programs/holder.mool 3`

use mool::parser::parse_program;
use mool::runtime::{run_with, RunOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "programs/holder.mool".into());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let src = std::fs::read_to_string(&path).expect("readable program");
    let prog = parse_program(&src).unwrap_or_else(|ds| {
        ds.iter().for_each(|d| eprintln!("{}", d.render(&path)));
        std::process::exit(1)
    });
    let r = run_with(
        &prog,
        &RunOptions {
            seed,
            trace: true,
            ..RunOptions::default()
        },
    );
    for ev in &r.trace {
        println!("{ev}");
    }
    println!("-- heap");
    for (i, o) in r.state.heap.iter().enumerate() {
        let fields: Vec<String> = o.fields.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        println!("o{i} {} [{}] {{{}}}", o.class, o.usage, fields.join(", "));
    }
    if let Some(e) = r.error {
        println!("-- {}: {e}", e.code());
    }
}
