//! Decides usage subtyping for pairs given on the command line, under both
//! readings of the variant rule.
//!
//! `cargo run --example subtyping -- "lin{a; end + b; end}" "lin{a; end}"`

use mool::parser::parse_usage;
use mool::usage::{subtype_usage_with, VariantRule};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let pairs: Vec<(String, String)> = if args.len() >= 2 {
        args.chunks(2)
            .filter(|c| c.len() == 2)
            .map(|c| (c[0].clone(), c[1].clone()))
            .collect()
    } else {
        [
            ("lin{a; end + b; end}", "lin{a; end}"),
            ("lin{a; end}", "lin{a; end + b; end}"),
            ("mu X. un{m; X}", "un{m; mu X. un{m; X}}"),
            ("lin{a; end}", "«lin{a; end + b; end} + end»"),
            ("«lin{a; end + b; end} + end»", "«lin{b; end} + end»"),
            ("lin{a; end}", "«lin{b; end} + end»"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
    };
    println!("{:<34} {:<34} verbatim conventional", "u", "u'");
    for (a, b) in pairs {
        let (u, v) = match (parse_usage(&a), parse_usage(&b)) {
            (Ok(u), Ok(v)) => (u, v),
            (Err(d), _) | (_, Err(d)) => {
                eprintln!("cannot parse: {}", d.message);
                std::process::exit(64);
            }
        };
        println!(
            "{:<34} {:<34} {:<8} {}",
            u.to_string(),
            v.to_string(),
            subtype_usage_with(&u, &v, VariantRule::Verbatim),
            subtype_usage_with(&u, &v, VariantRule::Conventional)
        );
    }
}
