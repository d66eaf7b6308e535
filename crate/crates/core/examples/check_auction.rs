//! Parses and type-checks the auction system, printing any diagnostics.

use mool::parser::parse_program;
use mool::typecheck::check_program;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/programs/auction.mool").into());
    let src = std::fs::read_to_string(&path).expect("readable program");
    let program = match parse_program(&src) {
        Ok(p) => p,
        Err(diags) => {
            for d in diags {
                eprintln!("{}", d.render(&path));
            }
            std::process::exit(1);
        }
    };
    println!("{} classes", program.classes.len());
    for c in &program.classes {
        println!("  {:<11} {}", c.name, c.usage);
    }
    let diags = check_program(&program);
    for d in &diags {
        eprintln!("{}", d.render(&path));
    }
    if diags.is_empty() {
        println!("well typed");
    } else {
        std::process::exit(1);
    }
}
