//! Surface syntax to AST.

mod lexer;
mod parse;
mod resolve;

pub use lexer::{tokenize, Keyword, Tok, Token};
pub use parse::INITIAL_USAGE;
pub use resolve::{check_strict_core, insert_default_usage, insert_this};

use crate::ast::{Program, Type};
use crate::diagnostics::{has_errors, Diagnostic};
use crate::usage::{Qualifier, Usage};

/// Parses and resolves a whole program. Errors are accumulated; on
/// success the program has every usage closed, contractive and expanded,
/// and every field access written as `this.f`.
pub fn parse_program(source: &str) -> Result<Program, Vec<Diagnostic>> {
    let (tokens, mut diags) = tokenize(source);
    let mut p = parse::Parser::new(tokens);
    let raw = p.program();
    diags.append(&mut p.diags);
    if has_errors(&diags) {
        return Err(diags);
    }
    let (program, mut rdiags) = resolve::resolve(&raw);
    diags.append(&mut rdiags);
    if has_errors(&diags) {
        Err(diags)
    } else {
        Ok(program)
    }
}

fn finish<T>(p: &mut parse::Parser, r: Result<T, Diagnostic>) -> Result<T, Diagnostic> {
    let v = r?;
    p.expect_eof()?;
    Ok(v)
}

fn parser_for(source: &str) -> Result<parse::Parser, Diagnostic> {
    let (tokens, diags) = tokenize(source);
    if let Some(d) = diags.into_iter().next() {
        return Err(d);
    }
    Ok(parse::Parser::new(tokens))
}

/// Parses a stand-alone usage term such as `lin init; *{selling + bidding}`.
/// Free names are left as variables.
pub fn parse_usage(source: &str) -> Result<Usage, Diagnostic> {
    let mut p = parser_for(source)?;
    let r = p.usage(Qualifier::Un, false);
    finish(&mut p, r)
}

/// Parses a stand-alone type such as `Auction[Choose]`, without resolving
/// names. A bare class name carries the free variable [`INITIAL_USAGE`].
pub fn parse_type(source: &str) -> Result<Type, Diagnostic> {
    let mut p = parser_for(source)?;
    let r = p.ty();
    finish(&mut p, r)
}

/// Parses a stand-alone expression or statement list. Names are not
/// resolved, so fields appear as bare identifiers unless written `this.f`.
pub fn parse_expr(source: &str) -> Result<crate::ast::Expr, Diagnostic> {
    let mut p = parser_for(source)?;
    let r = p.expr_list();
    finish(&mut p, r)
}
