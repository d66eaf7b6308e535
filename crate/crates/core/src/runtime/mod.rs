//! Small-step interpreter. A machine state is a heap of object records,
//! the parameter and local slots of every method activation, and one
//! expression per thread; a step rewrites the redex of one thread.

mod explore;
mod step;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ast::{
    Expr, ExprKind, ObjectId, Owner, Program, Receiver, SlotId, Type, Value, MAIN_CLASS,
    MAIN_METHOD,
};
use crate::usage::{Qualifier, Usage};

pub use explore::{
    explore, ExploreOptions, ExploreReport, TerminalCheck, Violation, ViolationKind,
};
pub use step::{decompose, Context, StepOutcome};

/// `(t, l, f = v)`: current type, lock flag and field values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ObjectRecord {
    pub class: String,
    pub usage: Usage,
    pub locked: bool,
    pub fields: BTreeMap<String, Value>,
}

impl ObjectRecord {
    pub fn ty(&self) -> Type {
        Type::Object(self.class.clone(), self.usage.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThreadState {
    pub id: usize,
    pub expr: Expr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct State {
    /// Indexed by object id; records are never removed.
    pub heap: Vec<ObjectRecord>,
    pub slots: Vec<Value>,
    pub threads: Vec<ThreadState>,
}

impl State {
    pub fn record(&self, o: ObjectId) -> &ObjectRecord {
        &self.heap[o.0 as usize]
    }

    pub fn record_mut(&mut self, o: ObjectId) -> &mut ObjectRecord {
        &mut self.heap[o.0 as usize]
    }

    pub fn slot(&self, s: SlotId) -> &Value {
        &self.slots[s.0 as usize]
    }

    /// `q(v)`: objects follow their current usage, everything else is
    /// unrestricted.
    pub fn qualifier(&self, v: &Value) -> Qualifier {
        match v {
            Value::Obj(o) => self.record(*o).usage.qualifier(),
            _ => Qualifier::Un,
        }
    }

    pub fn finished(&self) -> bool {
        self.threads.iter().all(|t| t.expr.is_value())
    }

    /// Objects whose protocol is over; nothing may call them again.
    pub fn collectible(&self) -> Vec<ObjectId> {
        (0..self.heap.len())
            .map(|i| ObjectId(i as u32))
            .filter(|o| self.record(*o).usage.unfold().is_end())
            .collect()
    }
}

/// `init(t)`: the value a field holds before it is first assigned.
pub fn init_value(t: &Type) -> Value {
    match t {
        Type::Unit => Value::Unit,
        Type::Boolean => Value::Bool(false),
        Type::Int => Value::Int(0),
        Type::Str => Value::Str(String::new()),
        Type::Object(..) => Value::Uninit,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("method {method} is not available on {object} at usage {usage}")]
    Unavailable {
        object: ObjectId,
        method: String,
        usage: String,
    },
    #[error("{0} holds no object")]
    Uninit(String),
    #[error("deadlock: threads {0:?} wait for locks held forever")]
    Deadlock(Vec<usize>),
    #[error("step limit of {0} reached")]
    StepLimit(u64),
    #[error("stuck: {0}")]
    Stuck(String),
}

impl RuntimeError {
    pub fn code(&self) -> &'static str {
        match self {
            RuntimeError::Unavailable { .. } => "E-RT-UNAVAILABLE",
            RuntimeError::Uninit(_) => "E-RT-UNINIT",
            RuntimeError::Deadlock(_) => "E-RT-DEADLOCK",
            RuntimeError::StepLimit(_) => "E-RT-STEP-LIMIT",
            RuntimeError::Stuck(_) => "E-RT-STUCK",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: u64,
    pub thread: usize,
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#{} T{} {} {}",
            self.step, self.thread, self.rule, self.detail
        )
    }
}

/// Program plus the settings that affect how bodies are instantiated.
pub struct Machine<'p> {
    pub program: &'p Program,
    /// `(class, method)` pairs whose activations are wrapped in `Active`
    /// frames so overlapping executions can be observed.
    pub watch: BTreeSet<(String, String)>,
}

impl<'p> Machine<'p> {
    pub fn new(program: &'p Program) -> Machine<'p> {
        Machine {
            program,
            watch: BTreeSet::new(),
        }
    }

    /// A fresh `Main` object and one thread about to call `main` on it.
    pub fn initial_state(&self) -> State {
        let mut s = State::default();
        let main = step::allocate(self.program, &mut s, MAIN_CLASS);
        let call = Expr::bare(ExprKind::Call(
            Receiver::Object(Owner::Obj(main)),
            MAIN_METHOD.to_string(),
            Vec::new(),
        ));
        s.threads.push(ThreadState { id: 0, expr: call });
        s
    }

    /// Threads that are neither finished nor waiting for a lock.
    pub fn runnable(&self, s: &State) -> Vec<usize> {
        s.threads
            .iter()
            .filter(|t| !t.expr.is_value() && self.blocked_on(s, t.id).is_none())
            .map(|t| t.id)
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub seed: u64,
    pub max_steps: u64,
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 0,
            max_steps: 1_000_000,
            trace: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub state: State,
    pub steps: u64,
    /// Lines written by `print`, in order.
    pub output: Vec<String>,
    pub trace: Vec<TraceEvent>,
    pub error: Option<RuntimeError>,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Runs `main` to completion under the scheduler seeded with `seed`.
pub fn run(p: &Program, seed: u64, max_steps: u64) -> RunReport {
    run_with(
        p,
        &RunOptions {
            seed,
            max_steps,
            trace: false,
        },
    )
}

pub fn run_with(p: &Program, opts: &RunOptions) -> RunReport {
    let m = Machine::new(p);
    let mut state = m.initial_state();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = RunReport {
        state: State::default(),
        steps: 0,
        output: Vec::new(),
        trace: Vec::new(),
        error: None,
    };
    loop {
        let runnable = m.runnable(&state);
        if runnable.is_empty() {
            if !state.finished() {
                let waiting = state
                    .threads
                    .iter()
                    .filter(|t| !t.expr.is_value())
                    .map(|t| t.id)
                    .collect();
                report.error = Some(RuntimeError::Deadlock(waiting));
            }
            break;
        }
        if report.steps >= opts.max_steps {
            report.error = Some(RuntimeError::StepLimit(opts.max_steps));
            break;
        }
        let tid = runnable[rng.gen_range(0..runnable.len())];
        match m.step(&mut state, tid) {
            Ok(StepOutcome::Stepped {
                rule,
                detail,
                output,
            }) => {
                report.steps += 1;
                if let Some(line) = output {
                    report.output.push(line);
                }
                if opts.trace {
                    report.trace.push(TraceEvent {
                        step: report.steps,
                        thread: tid,
                        rule,
                        detail,
                    });
                }
            }
            Ok(StepOutcome::Blocked(_)) => unreachable!("runnable thread blocked"),
            Err(e) => {
                report.error = Some(e);
                break;
            }
        }
    }
    report.state = state;
    report
}
