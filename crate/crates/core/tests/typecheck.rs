mod common;

use mool::ast::pretty_program;
use mool::diagnostics::codes;
use mool::parser::parse_program;
use mool::typecheck::{check_program, check_program_with, Options};
use mool::usage::VariantRule;
use proptest::prelude::*;

fn codes_of(src: &str) -> Vec<&'static str> {
    match parse_program(src) {
        Ok(p) => check_program(&p).into_iter().map(|d| d.code).collect(),
        Err(ds) => ds.into_iter().map(|d| d.code).collect(),
    }
}

const MAIN: &str = "class Main { unit main() { unit; } }\n";

#[test]
fn corpus_is_well_typed() {
    for name in common::CORPUS {
        let p = common::load(name);
        let ds = check_program(&p);
        assert!(ds.is_empty(), "{name}: {:?}", ds);
    }
}

#[test]
fn every_mutant_gets_its_code() {
    let ms = common::mutants();
    assert!(ms.len() >= 12);
    for (path, code) in ms {
        let got = codes_of(&common::read(&path));
        assert!(
            got.contains(&code.as_str()),
            "{}: expected {code}, got {got:?}",
            path.display()
        );
    }
}

#[test]
fn getprice_before_sold_points_at_the_call() {
    let path = common::programs_dir().join("bad_getprice_first.mool");
    let p = parse_program(&common::read(&path)).unwrap();
    let ds = check_program(&p);
    assert_eq!(ds.len(), 1);
    assert_eq!(ds[0].code, codes::CALL_UNAVAILABLE);
    assert_eq!((ds[0].span.start_line, ds[0].span.start_col), (90, 11));
}

#[test]
fn formatted_source_checks_the_same() {
    let mut paths: Vec<_> = common::CORPUS
        .iter()
        .map(|n| common::programs_dir().join(n))
        .collect();
    paths.extend(common::mutants().into_iter().map(|(p, _)| p));
    for path in paths {
        let src = common::read(&path);
        let Ok(p) = parse_program(&src) else { continue };
        let before: Vec<_> = check_program(&p)
            .into_iter()
            .map(|d| (d.code, d.message))
            .collect();
        let again = parse_program(&pretty_program(&p)).unwrap();
        let after: Vec<_> = check_program(&again)
            .into_iter()
            .map(|d| (d.code, d.message))
            .collect();
        assert_eq!(before, after, "{}", path.display());
    }
}

#[test]
fn linear_parameter_must_be_used_up() {
    let src = format!(
        "class T {{ usage lin go; end; unit go() {{ unit; }} }}\n\
         class U {{ usage lin take; end; unit take(T t) {{ unit; }} }}\n{MAIN}"
    );
    assert_eq!(codes_of(&src), vec![codes::PARAM_NOT_CONSUMED]);
}

#[test]
fn linear_parameter_used_up_is_fine() {
    let src = format!(
        "class T {{ usage lin go; end; unit go() {{ unit; }} }}\n\
         class U {{ usage lin take; end; unit take(T t) {{ t.go(); }} }}\n{MAIN}"
    );
    assert!(codes_of(&src).is_empty());
}

#[test]
fn shared_objects_may_be_used_freely() {
    let src = "class S { usage *{ping}; unit ping() { unit; } }\n\
         class Main { unit main() { S s = new S(); s.ping(); s.ping(); spawn s.ping(); } }\n"
        .to_string();
    assert!(codes_of(&src).is_empty(), "{:?}", codes_of(&src));
}

#[test]
fn a_branch_must_leave_the_same_fields() {
    let src = "class T { usage lin go; end; unit go() { unit; } }\n\
         class H { usage lin init; lin a; end;\n  T t;\n  unit init() { t = new T(); }\n  \
         unit a() { if (true) t.go(); else unit; }\n}\n"
        .to_string()
        + MAIN;
    assert_eq!(codes_of(&src), vec![codes::BRANCH_ENV_MISMATCH]);
}

#[test]
fn while_with_variant_condition() {
    let src = "class It { usage mu X. lin hasNext; «lin next; X + end»;\n  \
         boolean hasNext() { false; }\n  unit next() { unit; }\n}\n\
         class Main { unit main() { It it = new It(); while (it.hasNext()) it.next(); } }\n"
        .to_string();
    assert!(codes_of(&src).is_empty(), "{:?}", codes_of(&src));
}

#[test]
fn variant_result_needs_a_condition() {
    let src = "class It { usage lin hasNext; «end + end»; boolean hasNext() { false; } }\n\
         class Main { unit main() { It it = new It(); it.hasNext(); unit; } }\n"
        .to_string();
    assert_eq!(codes_of(&src), vec![codes::VARIANT_OUTSIDE_CONDITION]);
}

#[test]
fn variant_method_must_return_boolean() {
    let src = format!("class It {{ usage lin f; «end + end»; unit f() {{ unit; }} }}\n{MAIN}");
    assert_eq!(codes_of(&src), vec![codes::NOT_BOOLEAN_VARIANT]);
}

#[test]
fn strict_core_rejects_extensions() {
    let src = "class Main { unit main() { print(1); } }";
    let p = parse_program(src).unwrap();
    assert!(check_program(&p).is_empty());
    let strict = Options {
        strict_core: true,
        ..Options::default()
    };
    let ds = check_program_with(&p, &strict);
    assert!(ds.iter().any(|d| d.code == codes::STRICT_CORE));
}

#[test]
fn corpus_checks_under_the_conventional_rule_too() {
    let conv = Options {
        variant_rule: VariantRule::Conventional,
        ..Options::default()
    };
    for name in common::CORPUS {
        assert!(
            check_program_with(&common::load(name), &conv).is_empty(),
            "{name}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn method_order_does_not_matter(seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut paths: Vec<_> = common::CORPUS.iter().map(|n| common::programs_dir().join(n)).collect();
        paths.extend(common::mutants().into_iter().map(|(p, _)| p));
        let path = paths.choose(&mut rng).unwrap().clone();
        let Ok(p) = parse_program(&common::read(&path)) else { return Ok(()) };
        let mut shuffled = p.clone();
        for c in &mut shuffled.classes {
            c.methods.shuffle(&mut rng);
        }
        let codes = |p| {
            let mut v: Vec<_> = check_program(p).into_iter().map(|d| d.code).collect();
            v.sort();
            v
        };
        prop_assert_eq!(codes(&p), codes(&shuffled), "{}", path.display());
    }
}
