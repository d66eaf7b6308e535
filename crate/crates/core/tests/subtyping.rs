mod common;

use mool::ast::Type;
use mool::parser::parse_usage;
use mool::typecheck::subtype;
use mool::usage::{subtype_usage, subtype_usage_with, Qualifier, Usage, VariantRule};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn u(s: &str) -> Usage {
    parse_usage(s).unwrap_or_else(|d| panic!("{s}: {}", d.message))
}

fn usage_from(seed: u64, max: usize) -> Usage {
    common::gen_usage_upto(&mut ChaCha8Rng::seed_from_u64(seed), max)
}

fn usages(max: usize) -> impl Strategy<Value = Usage> {
    any::<u64>().prop_map(move |s| usage_from(s, max))
}

const RULES: [VariantRule; 2] = [VariantRule::Verbatim, VariantRule::Conventional];

#[test]
fn width_on_branches() {
    assert!(subtype_usage(&u("lin{a; end + b; end}"), &u("lin{a; end}")));
    assert!(!subtype_usage(
        &u("lin{a; end}"),
        &u("lin{a; end + b; end}")
    ));
}

#[test]
fn recursion_is_equi_recursive() {
    let r = u("mu X. un{m; X}");
    let once = u("un{m; mu X. un{m; X}}");
    assert!(subtype_usage(&r, &once));
    assert!(subtype_usage(&once, &r));
}

#[test]
fn qualifiers_must_match() {
    assert!(!subtype_usage(&u("lin{a; end}"), &u("un{a; end}")));
    assert!(!subtype_usage(&u("un{a; end}"), &u("lin{a; end}")));
}

#[test]
fn variants_compare_componentwise() {
    let v = u("«lin{a; end + b; end} + end»");
    let w = u("«lin{a; end} + end»");
    assert!(subtype_usage(&v, &w));
    assert!(!subtype_usage(&w, &v));
}

#[test]
fn branch_below_variant_follows_the_chosen_rule() {
    // Verbatim: a side of the variant must be a subtype of the branch.
    let b = u("lin{a; end}");
    let v = u("«lin{a; end + b; end} + end»");
    assert!(subtype_usage_with(&b, &v, VariantRule::Verbatim));
    assert!(!subtype_usage_with(&b, &v, VariantRule::Conventional));
    let narrow = u("«lin{} + end»");
    assert!(subtype_usage_with(&b, &narrow, VariantRule::Conventional));
    assert!(!subtype_usage_with(&b, &narrow, VariantRule::Verbatim));
}

#[test]
fn verbatim_variant_rule_is_not_transitive() {
    let a = u("lin{a; end}");
    let b = u("«lin{a; end + b; end} + end»");
    let c = u("«lin{b; end} + end»");
    let r = VariantRule::Verbatim;
    assert!(subtype_usage_with(&a, &b, r));
    assert!(subtype_usage_with(&b, &c, r));
    assert!(!subtype_usage_with(&a, &c, r));
}

#[test]
fn object_subtyping_needs_equal_classes() {
    let e = Usage::Branch(Qualifier::Un, Vec::new());
    assert!(!subtype(
        &Type::object("C", e.clone()),
        &Type::object("D", e.clone())
    ));
    assert!(subtype(
        &Type::object("C", e.clone()),
        &Type::object("C", e)
    ));
    assert!(subtype(&Type::Boolean, &Type::Boolean));
    assert!(!subtype(&Type::Boolean, &Type::Unit));
}

#[test]
fn unfolding_examples() {
    assert_eq!(
        u("mu X. mu Y. un{m; Y}").unfold(),
        u("un{m; mu Y. un{m; Y}}")
    );
    assert_eq!(u("end").unfold(), u("end"));
    assert!(!Usage::rec("X", Usage::var("X")).is_contractive());
    assert!(!Usage::rec("X", Usage::rec("Y", Usage::var("X"))).is_contractive());
    assert_eq!(u("mu X. un{m; X}").qualifier(), Qualifier::Un);
    assert_eq!(u("«end + end»").qualifier(), Qualifier::Lin);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn generated_usages_are_well_formed(x in usages(6)) {
        prop_assert!(x.is_contractive());
        prop_assert!(x.is_closed());
        prop_assert!(x.size() <= 6);
    }

    #[test]
    fn reflexive(x in usages(6)) {
        for r in RULES {
            prop_assert!(subtype_usage_with(&x, &x, r));
        }
    }

    #[test]
    fn conventional_rule_is_transitive(a in usages(6), b in usages(6), c in usages(6)) {
        let r = VariantRule::Conventional;
        if subtype_usage_with(&a, &b, r) && subtype_usage_with(&b, &c, r) {
            prop_assert!(subtype_usage_with(&a, &c, r), "{} <: {} <: {}", a, b, c);
        }
    }

    #[test]
    fn unfolding_is_invisible(x in usages(6), y in usages(6)) {
        for r in RULES {
            prop_assert!(subtype_usage_with(&x, &x.unfold(), r));
            prop_assert!(subtype_usage_with(&x.unfold(), &x, r));
            prop_assert_eq!(subtype_usage_with(&x, &y, r), subtype_usage_with(&x.unfold(), &y.unfold(), r));
        }
    }

    #[test]
    fn agrees_with_bounded_simulation(x in usages(6), y in usages(6)) {
        for r in RULES {
            prop_assert_eq!(subtype_usage_with(&x, &y, r), common::simulates(&x, &y, 8, r), "{} vs {}", x, y);
        }
    }

    #[test]
    fn dropping_a_supertype_entry_keeps_subtyping(x in usages(6), y in usages(6), k in 0usize..4) {
        for r in RULES {
            if !subtype_usage_with(&x, &y, r) {
                continue;
            }
            if let Usage::Branch(q, mut entries) = y.unfold() {
                if !entries.is_empty() {
                    entries.remove(k % entries.len());
                    prop_assert!(subtype_usage_with(&x, &Usage::Branch(q, entries), r));
                }
            }
        }
    }

    #[test]
    fn alpha_renaming_is_invisible(x in usages(6)) {
        prop_assert_eq!(x.normalize(), x.normalize().normalize());
        prop_assert!(x.alpha_eq(&x.normalize()));
    }

    #[test]
    fn printing_round_trips(x in usages(6)) {
        let printed = x.to_string();
        let back = parse_usage(&printed).map_err(|d| TestCaseError::fail(format!("{printed}: {}", d.message)))?;
        prop_assert!(back.alpha_eq(&x), "{} reparsed as {}", printed, back);
    }
}
