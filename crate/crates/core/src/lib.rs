//! MOOL: a small concurrent object-oriented language whose classes carry
//! usage types, i.e. protocols saying which methods may be called, in
//! which order, and whether the object may be shared at each point.
//!
//! The pipeline is [`parser::parse_program`] to [`typecheck::check_program`]
//! to [`runtime::run`]; [`runtime::explore`] enumerates interleavings.

pub mod ast;
pub mod cli;
pub mod diagnostics;
pub mod parser;
pub mod runtime;
pub mod typecheck;
pub mod usage;
