//! Type-checks every mutant under `programs/mutants` and compares the
//! first diagnostic with the code its header expects.

use mool::parser::parse_program;
use mool::typecheck::check_program;

fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("programs/mutants");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .expect("mutants directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    paths.sort();
    let mut misses = 0;
    for path in paths {
        let src = std::fs::read_to_string(&path).expect("readable mutant");
        let expect = src
            .lines()
            .find_map(|l| l.strip_prefix("// expect:"))
            .map(str::trim)
            .unwrap_or("?");
        let diags = match parse_program(&src) {
            Ok(p) => check_program(&p),
            Err(ds) => ds,
        };
        let name = path.file_stem().unwrap().to_string_lossy();
        let hit = diags.iter().any(|d| d.code == expect);
        misses += usize::from(!hit);
        let first = diags
            .first()
            .map(|d| d.render(&name))
            .unwrap_or_else(|| "accepted".into());
        println!("{} {name:<28} {first}", if hit { "ok  " } else { "MISS" });
    }
    std::process::exit(i32::from(misses > 0));
}
