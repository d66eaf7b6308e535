//! Command-line driver: `mool check|run|explore|fmt FILE`.
//!
//! Exit codes: 0 success, 1 rejected program or explorer violation,
//! 2 runtime fault, 3 explorer budget exhausted, 64 bad arguments,
//! 66 unreadable input.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::ast::{pretty_program, Program};
use crate::diagnostics::Diagnostic;
use crate::parser::parse_program;
use crate::runtime::{explore, run_with, ExploreOptions, RunOptions};
use crate::typecheck::{check_program_with, Options};
use crate::usage::VariantRule;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_FAULT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NO_INPUT: i32 = 66;

#[derive(Parser, Debug)]
#[command(name = "mool", version, about = "Check, run and explore MOOL programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and type-check.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Type-check, then run under the seeded scheduler.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
        /// Print one line per reduction step to stderr.
        #[arg(long)]
        trace: bool,
        /// Run even if the program does not type-check.
        #[arg(long)]
        unchecked: bool,
    },
    /// Type-check, then search every interleaving.
    Explore {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        max_states: usize,
        /// `Class.method` whose activations on one object must not overlap.
        #[arg(long, value_name = "CLASS.METHOD")]
        watch: Vec<String>,
        /// Interleave every step, including thread-local ones.
        #[arg(long)]
        no_reduce: bool,
        #[arg(long)]
        unchecked: bool,
    },
    /// Pretty-print the program.
    Fmt {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(clap::Args, Debug)]
pub struct Common {
    pub input: PathBuf,
    /// Reject anything outside the core calculus.
    #[arg(long)]
    pub strict_core: bool,
    #[arg(long, value_enum, default_value_t = VariantArg::Verbatim)]
    pub variant_subtyping: VariantArg,
    /// Diagnostics as JSON lines.
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    Verbatim,
    Conventional,
}

impl From<VariantArg> for VariantRule {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Verbatim => VariantRule::Verbatim,
            VariantArg::Conventional => VariantRule::Conventional,
        }
    }
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Check { common }
            | Command::Run { common, .. }
            | Command::Explore { common, .. }
            | Command::Fmt { common } => common,
        }
    }
}

fn report(diags: &[Diagnostic], file: &str, json: bool, err: &mut dyn Write) {
    for d in diags {
        let line = if json {
            d.to_json(file).to_string()
        } else {
            d.render(file)
        };
        let _ = writeln!(err, "{line}");
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let common = cli.command.common();
    let file = common.input.display().to_string();
    let src = match std::fs::read_to_string(&common.input) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "mool: cannot read {file}: {e}");
            return EXIT_NO_INPUT;
        }
    };
    let prog = match parse_program(&src) {
        Ok(p) => p,
        Err(diags) => {
            report(&diags, &file, common.json, err);
            return EXIT_REJECTED;
        }
    };
    let opts = Options {
        strict_core: common.strict_core,
        variant_rule: common.variant_subtyping.into(),
    };
    let check = |prog: &Program, err: &mut dyn Write| {
        let diags = check_program_with(prog, &opts);
        report(&diags, &file, common.json, err);
        diags.is_empty()
    };
    match &cli.command {
        Command::Check { .. } => {
            if check(&prog, err) {
                EXIT_OK
            } else {
                EXIT_REJECTED
            }
        }
        Command::Fmt { .. } => {
            let _ = write!(out, "{}", pretty_program(&prog));
            EXIT_OK
        }
        Command::Run {
            seed,
            max_steps,
            trace,
            unchecked,
            ..
        } => {
            if !check(&prog, err) && !unchecked {
                return EXIT_REJECTED;
            }
            let r = run_with(
                &prog,
                &RunOptions {
                    seed: *seed,
                    max_steps: *max_steps,
                    trace: *trace,
                },
            );
            for ev in &r.trace {
                let _ = writeln!(err, "{ev}");
            }
            for line in &r.output {
                let _ = writeln!(out, "{line}");
            }
            match &r.error {
                None => EXIT_OK,
                Some(e) => {
                    let _ = writeln!(
                        err,
                        "{file}: error[{}]: {e} (after {} steps)",
                        e.code(),
                        r.steps
                    );
                    EXIT_FAULT
                }
            }
        }
        Command::Explore {
            max_states,
            watch,
            no_reduce,
            unchecked,
            ..
        } => {
            if !check(&prog, err) && !unchecked {
                return EXIT_REJECTED;
            }
            let mut pairs = Vec::new();
            for w in watch {
                match w.split_once('.') {
                    Some((c, m)) if !c.is_empty() && !m.is_empty() => {
                        pairs.push((c.to_string(), m.to_string()))
                    }
                    _ => {
                        let _ = writeln!(err, "mool: --watch expects CLASS.METHOD, got {w}");
                        return EXIT_USAGE;
                    }
                }
            }
            let r = explore(
                &prog,
                &ExploreOptions {
                    max_states: *max_states,
                    watch: pairs,
                    terminal: None,
                    reduce: !no_reduce,
                },
            );
            let _ = writeln!(
                out,
                "{} states, {} transitions, {} terminal, {} violations",
                r.states,
                r.transitions,
                r.terminal_states,
                r.violations.len()
            );
            for v in &r.violations {
                let _ = writeln!(
                    err,
                    "{file}: error[{}]: {} (schedule {:?})",
                    v.kind.code(),
                    v.kind,
                    v.schedule
                );
            }
            if !r.violations.is_empty() {
                EXIT_REJECTED
            } else if r.exhausted {
                let _ = writeln!(err, "{file}: state budget of {max_states} exhausted");
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            }
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    main_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
