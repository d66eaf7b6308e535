//! Exhaustive search over interleavings. Every reachable state is checked
//! for lock safety, protocol faults and aliasing of linear objects.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::ast::{Expr, ExprKind, ObjectId, Program, Value};
use crate::usage::Qualifier;

use super::step::is_local;
use super::{Machine, RuntimeError, State, StepOutcome};

/// Extra condition on states where every thread has finished; returns a
/// description of what went wrong.
pub type TerminalCheck = Box<dyn Fn(&State) -> Option<String>>;

pub struct ExploreOptions {
    pub max_states: usize,
    /// Methods whose activations on the same object must not overlap.
    pub watch: Vec<(String, String)>,
    pub terminal: Option<TerminalCheck>,
    /// Take thread-local steps one thread at a time instead of
    /// interleaving them.
    pub reduce: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            max_states: 100_000,
            watch: Vec::new(),
            terminal: None,
            reduce: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// More than one `InSync` frame for an object, or a lock flag that does
    /// not match the frames.
    LockSafety {
        object: ObjectId,
        frames: usize,
        locked: bool,
    },
    /// Two activations of watched methods on the same object at once.
    Overlap {
        object: ObjectId,
        method: String,
    },
    /// A linear object reachable from more than one place.
    LinearAlias {
        object: ObjectId,
        references: usize,
    },
    Fault(RuntimeError),
    Deadlock(Vec<usize>),
    Terminal(String),
}

impl ViolationKind {
    pub fn code(&self) -> &'static str {
        match self {
            ViolationKind::LockSafety { .. } => "E-EX-LOCK",
            ViolationKind::Overlap { .. } => "E-EX-OVERLAP",
            ViolationKind::LinearAlias { .. } => "E-EX-LINEAR-ALIAS",
            ViolationKind::Fault(e) => e.code(),
            ViolationKind::Deadlock(_) => "E-RT-DEADLOCK",
            ViolationKind::Terminal(_) => "E-EX-TERMINAL",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::LockSafety {
                object,
                frames,
                locked,
            } => write!(
                f,
                "{object} has {frames} synchronized frames with lock flag {}",
                u8::from(*locked)
            ),
            ViolationKind::Overlap { object, method } => {
                write!(f, "two activations of {method} on {object} overlap")
            }
            ViolationKind::LinearAlias { object, references } => {
                write!(f, "linear {object} is referenced {references} times")
            }
            ViolationKind::Fault(e) => write!(f, "{e}"),
            ViolationKind::Deadlock(ts) => write!(f, "deadlock: threads {ts:?} are blocked"),
            ViolationKind::Terminal(m) => f.write_str(m),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Thread choices leading from the initial state.
    pub schedule: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct ExploreReport {
    pub states: usize,
    pub transitions: usize,
    pub terminal_states: usize,
    /// States with more than one runnable thread.
    pub branching_states: usize,
    /// The state budget ran out before the search finished.
    pub exhausted: bool,
    pub violations: Vec<Violation>,
}

impl ExploreReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty() && !self.exhausted
    }
}

/// Depth-first search of every interleaving of `p` from its initial state.
pub fn explore(p: &Program, opts: &ExploreOptions) -> ExploreReport {
    let mut m = Machine::new(p);
    m.watch = opts.watch.iter().cloned().collect();
    let mut report = ExploreReport::default();
    let mut seen: HashSet<u64> = HashSet::new();
    let mut reported: HashSet<String> = HashSet::new();
    let init = m.initial_state();
    seen.insert(fingerprint(&init));
    let mut stack = vec![(init, Vec::new())];
    while let Some((state, schedule)) = stack.pop() {
        report.states += 1;
        let mut found = invariants(&state);
        let mut runnable = m.runnable(&state);
        if opts.reduce {
            if let Some(&t) = runnable.iter().find(|&&t| is_local(&state, t)) {
                runnable = vec![t];
            }
        }
        if runnable.is_empty() {
            if state.finished() {
                report.terminal_states += 1;
                if let Some(msg) = opts.terminal.as_ref().and_then(|t| t(&state)) {
                    found.push(ViolationKind::Terminal(msg));
                }
            } else {
                let waiting = state
                    .threads
                    .iter()
                    .filter(|t| !t.expr.is_value())
                    .map(|t| t.id)
                    .collect();
                found.push(ViolationKind::Deadlock(waiting));
            }
        }
        if runnable.len() > 1 {
            report.branching_states += 1;
        }
        for tid in runnable {
            let mut next = state.clone();
            report.transitions += 1;
            let mut path = schedule.clone();
            path.push(tid);
            match m.step(&mut next, tid) {
                Ok(StepOutcome::Stepped { .. }) => {
                    if seen.len() >= opts.max_states {
                        report.exhausted = true;
                        continue;
                    }
                    if seen.insert(fingerprint(&next)) {
                        stack.push((next, path));
                    }
                }
                Ok(StepOutcome::Blocked(_)) => {}
                Err(e) => found.push(ViolationKind::Fault(e)),
            }
        }
        for kind in found {
            if reported.insert(kind.to_string()) {
                report.violations.push(Violation {
                    kind,
                    schedule: schedule.clone(),
                });
            }
        }
    }
    report
}

fn fingerprint(s: &State) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    s.hash(&mut h);
    h.finish()
}

fn count_frames(
    e: &Expr,
    sync: &mut BTreeMap<ObjectId, usize>,
    active: &mut BTreeMap<(ObjectId, String), usize>,
) {
    e.walk(&mut |x| match &x.kind {
        ExprKind::InSync(o, _) => *sync.entry(*o).or_default() += 1,
        ExprKind::Active(o, m, _) => *active.entry((*o, m.clone())).or_default() += 1,
        _ => {}
    });
}

fn count_ref(v: &Value, refs: &mut BTreeMap<ObjectId, usize>) {
    if let Value::Obj(o) = v {
        *refs.entry(*o).or_default() += 1;
    }
}

/// Violations visible in a single state.
pub(crate) fn invariants(s: &State) -> Vec<ViolationKind> {
    let mut out = Vec::new();
    let mut sync = BTreeMap::new();
    let mut active = BTreeMap::new();
    let mut refs = BTreeMap::new();
    for t in &s.threads {
        count_frames(&t.expr, &mut sync, &mut active);
        t.expr.walk(&mut |x| {
            if let ExprKind::Value(v) = &x.kind {
                count_ref(v, &mut refs);
            }
        });
    }
    for rec in &s.heap {
        rec.fields.values().for_each(|v| count_ref(v, &mut refs));
    }
    s.slots.iter().for_each(|v| count_ref(v, &mut refs));

    for (i, rec) in s.heap.iter().enumerate() {
        let o = ObjectId(i as u32);
        let frames = sync.get(&o).copied().unwrap_or(0);
        if frames > 1 || (frames == 1) != rec.locked {
            out.push(ViolationKind::LockSafety {
                object: o,
                frames,
                locked: rec.locked,
            });
        }
    }
    let mut per_object: BTreeMap<ObjectId, (usize, String)> = BTreeMap::new();
    for ((o, m), n) in active {
        let e = per_object.entry(o).or_insert((0, m.clone()));
        e.0 += n;
    }
    for (o, (n, m)) in per_object {
        if n > 1 {
            out.push(ViolationKind::Overlap {
                object: o,
                method: m,
            });
        }
    }
    for (o, n) in refs {
        if n > 1 && s.record(o).usage.qualifier() == Qualifier::Lin {
            out.push(ViolationKind::LinearAlias {
                object: o,
                references: n,
            });
        }
    }
    out
}
