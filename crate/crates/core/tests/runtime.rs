mod common;

use mool::ast::{Expr, ExprKind, ObjectId, Owner, Place, Receiver, Type, Value};
use mool::parser::parse_program;
use mool::runtime::{decompose, init_value, run, run_with, RunOptions};
use mool::usage::Usage;

fn traced(name: &str, seed: u64) -> Vec<String> {
    let p = common::load(name);
    let r = run_with(
        &p,
        &RunOptions {
            seed,
            max_steps: 1_000_000,
            trace: true,
        },
    );
    assert!(r.ok(), "{name} seed {seed}: {:?}", r.error);
    r.trace.iter().map(|e| e.to_string()).collect()
}

fn counter_value(r: &mool::runtime::RunReport) -> Value {
    let rec = r.state.heap.iter().find(|o| o.class == "Counter").unwrap();
    rec.fields["n"].clone()
}

#[test]
fn trivial_main_takes_one_step() {
    let r = run(&common::load("trivial.mool"), 0, 100);
    assert!(r.ok());
    assert_eq!(r.steps, 1);
    assert_eq!(r.state.threads.len(), 1);
}

#[test]
fn auction_sells_to_the_highest_bidder() {
    let p = common::load("auction.mool");
    for seed in 0..20 {
        let r = run(&p, seed, 1_000_000);
        assert!(r.ok(), "seed {seed}: {:?}", r.error);
        assert_eq!(r.output, vec!["made 110 euros!".to_string()]);
    }
}

#[test]
fn same_seed_same_trace() {
    for name in common::CORPUS {
        for seed in [0, 7, 12345] {
            assert_eq!(traced(name, seed), traced(name, seed), "{name} seed {seed}");
        }
    }
}

#[test]
fn seeds_change_the_schedule() {
    let traces: std::collections::HashSet<_> = (0..20).map(|s| traced("counter.mool", s)).collect();
    assert!(traces.len() > 1);
}

#[test]
fn trace_lines_name_rules() {
    let t = traced("trivial.mool", 0);
    assert_eq!(t, vec!["#1 T0 R-SelfCall o0.main()".to_string()]);
    let t = traced("holder.mool", 3);
    assert!(t.iter().any(|l| l.contains(" R-LinField ")));
    assert!(t.iter().all(|l| l.starts_with('#')));
}

#[test]
fn synchronized_counter_never_loses_an_update() {
    let p = common::load("counter.mool");
    for seed in 0..100 {
        let r = run(&p, seed, 100_000);
        assert!(r.ok());
        assert_eq!(counter_value(&r), Value::Int(2), "seed {seed}");
    }
}

#[test]
fn unsynchronized_counter_can_lose_an_update() {
    let p = common::load("counter_unsync.mool");
    let lost = (0..200).any(|seed| counter_value(&run(&p, seed, 100_000)) == Value::Int(1));
    assert!(lost);
}

#[test]
fn linear_field_reads_are_destructive() {
    let r = run(&common::load("holder.mool"), 0, 1000);
    assert!(r.ok());
    let holder = r.state.heap.iter().find(|o| o.class == "Holder").unwrap();
    assert_eq!(holder.fields["t"], Value::Unit);
    let token = r.state.heap.iter().find(|o| o.class == "Token").unwrap();
    assert!(token.usage.unfold().is_end());
}

#[test]
fn locks_are_released_at_the_end() {
    for name in common::CORPUS {
        let r = run(&common::load(name), 1, 1_000_000);
        assert!(r.state.heap.iter().all(|o| !o.locked), "{name}");
        assert!(r.state.finished());
    }
}

#[test]
fn calling_outside_the_protocol_faults() {
    let src = common::read(&common::programs_dir().join("bad_getprice_first.mool"));
    let p = parse_program(&src).unwrap();
    for seed in 0..10 {
        let r = run(&p, seed, 1_000_000);
        assert_eq!(r.error.map(|e| e.code()), Some("E-RT-UNAVAILABLE"));
    }
}

#[test]
fn runaway_loops_hit_the_step_limit() {
    let p = parse_program("class Main { unit main() { while (true) unit; } }").unwrap();
    let r = run(&p, 0, 500);
    assert_eq!(r.error.map(|e| e.code()), Some("E-RT-STEP-LIMIT"));
    assert_eq!(r.steps, 500);
}

#[test]
fn opposite_lock_order_can_deadlock() {
    let p = common::load("deadlock.mool");
    let r = run(&p, 10, 10_000);
    assert_eq!(r.error.map(|e| e.code()), Some("E-RT-DEADLOCK"));
    assert!(run(&p, 0, 10_000).ok());
}

#[test]
fn calls_through_an_unset_field_fault() {
    let src = "class C { C next; unit go() { next.go(); } }\nclass Main { unit main() { C c = new C(); c.go(); } }";
    let p = parse_program(src).unwrap();
    let r = run(&p, 0, 1000);
    assert_eq!(r.error.map(|e| e.code()), Some("E-RT-UNINIT"));
}

#[test]
fn print_and_arithmetic() {
    let src = "class Main { unit main() { int x = 40; print(\"x=\" + (x + 2)); print(x <= 3); } }";
    let p = parse_program(src).unwrap();
    let r = run(&p, 0, 1000);
    assert!(r.ok(), "{:?}", r.error);
    assert_eq!(r.output, vec!["x=42".to_string(), "false".to_string()]);
}

#[test]
fn default_field_values() {
    assert_eq!(init_value(&Type::Unit), Value::Unit);
    assert_eq!(init_value(&Type::Boolean), Value::Bool(false));
    assert_eq!(init_value(&Type::Int), Value::Int(0));
    assert_eq!(init_value(&Type::Str), Value::Str(String::new()));
    assert_eq!(init_value(&Type::object("C", Usage::end())), Value::Uninit);
}

#[test]
fn decompose_finds_the_innermost_redex() {
    let o = ObjectId(1);
    let call = Expr::bare(ExprKind::Call(
        Receiver::Object(Owner::Obj(o)),
        "m".into(),
        vec![Expr::value(Value::Int(3))],
    ));
    let e = Expr::bare(ExprKind::Assign(
        Place::Field(Owner::Obj(o), "f".into()),
        Box::new(call.clone()),
    ));
    let (ctx, redex) = decompose(&e);
    assert_eq!(redex, &call);
    assert_eq!(
        ctx.plug(&e, Expr::unit()),
        Expr::bare(ExprKind::Assign(
            Place::Field(Owner::Obj(o), "f".into()),
            Box::new(Expr::unit())
        ))
    );

    let seq = Expr::seq(Expr::unit(), Expr::value(Value::Int(1)));
    let (ctx, redex) = decompose(&seq);
    assert!(ctx.0.is_empty());
    assert_eq!(redex, &seq);
}
