mod common;

use mool::ast::{pretty_program, pretty_usage, ExprKind, Type};
use mool::diagnostics::codes;
use mool::parser::{parse_expr, parse_program, parse_type, parse_usage};
use mool::usage::{Qualifier, Usage};

fn first_code(src: &str) -> &'static str {
    parse_program(src).expect_err("should not parse")[0].code
}

#[test]
fn corpus_parses() {
    for name in common::CORPUS {
        common::load(name);
    }
}

#[test]
fn pretty_printing_round_trips() {
    for name in common::CORPUS {
        let p = common::load(name);
        let printed = pretty_program(&p);
        let again =
            parse_program(&printed).unwrap_or_else(|ds| panic!("{name}: {ds:?}\n{printed}"));
        assert_eq!(p, again, "{name}");
        assert_eq!(
            printed,
            pretty_program(&again),
            "{name} printing is not stable"
        );
    }
}

#[test]
fn usage_syntax() {
    let u = parse_usage("lin sold; «un getPrice; end + end»").unwrap();
    let expected = Usage::branch(
        Qualifier::Lin,
        [(
            "sold",
            Usage::variant(
                Usage::branch(Qualifier::Un, [("getPrice", Usage::end())]),
                Usage::end(),
            ),
        )],
    );
    assert_eq!(u, expected);
    assert_eq!(parse_usage(&pretty_usage(&u)).unwrap(), u);
}

#[test]
fn star_is_a_shared_loop() {
    let u = parse_usage("*{put + get}").unwrap();
    assert_eq!(u.qualifier(), Qualifier::Un);
    let put = u.after_call("put").unwrap();
    assert!(put.after_call("get").is_some());
}

#[test]
fn variant_children_default_to_linear() {
    let u = parse_usage("«a; end + end»").unwrap();
    let Usage::Variant(t, _) = u else {
        panic!("{u:?}")
    };
    assert_eq!(t.qualifier(), Qualifier::Lin);
}

#[test]
fn mu_binders() {
    let u = parse_usage("mu X. un{m; X}").unwrap();
    assert!(u.is_contractive());
    assert!(u.is_closed());
}

#[test]
fn object_types_carry_usages() {
    let t = parse_type("Selling[lin sold; end]").unwrap();
    assert!(matches!(t, Type::Object(ref c, _) if c == "Selling"));
    assert!(t.is_lin());
    assert_eq!(parse_type("int").unwrap(), Type::Int);
}

#[test]
fn expression_precedence() {
    let e = parse_expr("x = 1 + 2 >= 3;").unwrap();
    let ExprKind::Assign(_, rhs) = &e.kind else {
        panic!("{e:?}")
    };
    assert!(matches!(
        rhs.kind,
        ExprKind::BinOp(mool::ast::BinOp::Ge, _, _)
    ));
}

#[test]
fn negative_literals() {
    let e = parse_expr("0 - 1;").unwrap();
    assert!(matches!(e.kind, ExprKind::BinOp(..)));
    assert_eq!(
        parse_expr("-5;").unwrap().as_value(),
        Some(&mool::ast::Value::Int(-5))
    );
}

#[test]
fn syntax_errors_carry_positions() {
    let ds = parse_program("class Main {\n  unit main() { unit \n}\n").unwrap_err();
    assert_eq!(ds[0].code, codes::PARSE);
    assert!(ds[0].span.start_line >= 2);
}

#[test]
fn non_contractive_usage_rejected() {
    let src = "class A { usage lin init; mu X. X; unit init() { unit; } }\nclass Main { unit main() { unit; } }";
    assert_eq!(first_code(src), codes::NOT_CONTRACTIVE);
}

#[test]
fn unknown_class_rejected() {
    let src = "class Main { Nope x; unit main() { unit; } }";
    assert_eq!(first_code(src), codes::UNKNOWN_CLASS);
}

#[test]
fn missing_main_rejected() {
    assert_eq!(first_code("class A { unit f() { unit; } }"), codes::NO_MAIN);
}

#[test]
fn duplicate_methods_rejected() {
    let src = "class Main { unit main() { unit; } unit main() { unit; } }";
    assert_eq!(first_code(src), codes::DUPLICATE);
}

#[test]
fn unbound_usage_name_rejected() {
    let src = "class A { usage lin init; Y; unit init() { unit; } }\nclass Main { unit main() { unit; } }";
    assert_eq!(first_code(src), codes::UNBOUND_NAME);
}

#[test]
fn initial_usage_must_be_a_branch() {
    let src = "class A { usage «end + end»; }\nclass Main { unit main() { unit; } }";
    assert_eq!(first_code(src), codes::INIT_NOT_BRANCH);
}

#[test]
fn where_bindings_may_be_mutually_recursive() {
    let src = "class A {\n  usage lin ping; P where P = lin pong; Q, Q = lin ping; P;\n  unit ping() { unit; }\n  unit pong() { unit; }\n}\nclass Main { unit main() { unit; } }";
    let p = parse_program(src).unwrap();
    let u = &p.class("A").unwrap().usage;
    let after = u.after_call("ping").unwrap().after_call("pong").unwrap();
    assert!(after.after_call("ping").is_some());
}
