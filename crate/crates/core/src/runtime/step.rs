//! Reduction rules. A thread expression is split into an evaluation
//! context and a redex; the redex is rewritten in place.

use std::collections::{HashMap, HashSet};

use crate::ast::{
    BinOp, ClassDecl, Expr, ExprKind, MethodDecl, ObjectId, Owner, Place, Program, Receiver,
    SlotId, Value,
};
use crate::usage::{Qualifier, Usage};

use super::{init_value, Machine, ObjectRecord, RuntimeError, State, ThreadState};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Stepped {
        rule: &'static str,
        detail: String,
        /// Line written by `print`.
        output: Option<String>,
    },
    /// The redex is a synchronized call on an object locked by another thread.
    Blocked(ObjectId),
}

/// Path from the root of an expression to the hole of an evaluation
/// context, as child positions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context(pub Vec<usize>);

impl Context {
    /// `E[e]`.
    pub fn plug(&self, outer: &Expr, e: Expr) -> Expr {
        let mut out = outer.clone();
        let mut cur = &mut out;
        for &i in &self.0 {
            cur = child_mut(cur, i);
        }
        *cur = e;
        out
    }
}

/// `e = E[r]`: the evaluation context and the redex of a non-value
/// expression. Values decompose into the empty context and themselves.
pub fn decompose(e: &Expr) -> (Context, &Expr) {
    let mut path = Vec::new();
    let mut cur = e;
    while let Some(i) = next_child(cur) {
        path.push(i);
        cur = child(cur, i);
    }
    (Context(path), cur)
}

/// Values, and boolean results still waiting for a conditional to resolve
/// a variant.
fn done(e: &Expr) -> bool {
    e.is_value() || pending_bool(e).is_some()
}

/// `Resolve(o1, Resolve(o2, .. b))`: the objects to resolve and the result.
fn pending_bool(e: &Expr) -> Option<(Vec<ObjectId>, bool)> {
    let mut objs = Vec::new();
    let mut cur = e;
    loop {
        match &cur.kind {
            ExprKind::Resolve(o, inner) => {
                objs.push(*o);
                cur = inner;
            }
            ExprKind::Value(Value::Bool(b)) if !objs.is_empty() => return Some((objs, *b)),
            _ => return None,
        }
    }
}

/// Which child holds the redex, if the node itself is not the redex.
fn next_child(e: &Expr) -> Option<usize> {
    match &e.kind {
        ExprKind::Seq(a, _) if !a.is_value() => Some(0),
        ExprKind::Assign(_, r) if !r.is_value() => Some(0),
        ExprKind::Call(_, _, args) => args.iter().position(|a| !a.is_value()),
        ExprKind::If(c, _, _) if !done(c) => Some(0),
        ExprKind::Print(a) if !a.is_value() => Some(0),
        ExprKind::BinOp(_, l, _) if !l.is_value() => Some(0),
        ExprKind::BinOp(_, _, r) if !r.is_value() => Some(1),
        ExprKind::InSync(_, b) | ExprKind::Resolve(_, b) | ExprKind::Active(_, _, b)
            if !done(b) =>
        {
            Some(0)
        }
        _ => None,
    }
}

fn child(e: &Expr, i: usize) -> &Expr {
    match (&e.kind, i) {
        (ExprKind::Seq(a, _), 0)
        | (ExprKind::Assign(_, a), 0)
        | (ExprKind::If(a, _, _), 0)
        | (ExprKind::Print(a), 0)
        | (ExprKind::BinOp(_, a, _), 0)
        | (ExprKind::InSync(_, a), 0)
        | (ExprKind::Resolve(_, a), 0)
        | (ExprKind::Active(_, _, a), 0) => a,
        (ExprKind::BinOp(_, _, b), 1) => b,
        (ExprKind::Call(_, _, args), i) => &args[i],
        _ => unreachable!("no evaluation position {i}"),
    }
}

fn child_mut(e: &mut Expr, i: usize) -> &mut Expr {
    match (&mut e.kind, i) {
        (ExprKind::Seq(a, _), 0)
        | (ExprKind::Assign(_, a), 0)
        | (ExprKind::If(a, _, _), 0)
        | (ExprKind::Print(a), 0)
        | (ExprKind::BinOp(_, a, _), 0)
        | (ExprKind::InSync(_, a), 0)
        | (ExprKind::Resolve(_, a), 0)
        | (ExprKind::Active(_, _, a), 0) => a,
        (ExprKind::BinOp(_, _, b), 1) => b,
        (ExprKind::Call(_, _, args), i) => &mut args[i],
        _ => unreachable!("no evaluation position {i}"),
    }
}

fn redex_mut(e: &mut Expr) -> &mut Expr {
    match next_child(e) {
        Some(i) => redex_mut(child_mut(e, i)),
        None => e,
    }
}

/// New object of class `c` at its initial usage, unlocked, with default
/// field values.
pub(crate) fn allocate(p: &Program, s: &mut State, c: &str) -> ObjectId {
    let class = p.class(c).expect("class checked by resolution");
    let id = ObjectId(s.heap.len() as u32);
    s.heap.push(ObjectRecord {
        class: class.name.clone(),
        usage: class.usage.clone(),
        locked: false,
        fields: class
            .fields
            .iter()
            .map(|f| (f.name.clone(), init_value(&f.ty)))
            .collect(),
    });
    id
}

fn alloc_slot(s: &mut State, v: Value) -> SlotId {
    s.slots.push(v);
    SlotId(s.slots.len() as u32 - 1)
}

fn bind_place(p: &Place, this: ObjectId, scope: &HashMap<String, SlotId>) -> Place {
    match p {
        Place::Field(Owner::This, f) => Place::Field(Owner::Obj(this), f.clone()),
        Place::Ident(x) => match scope.get(x) {
            Some(s) => Place::Slot(*s),
            None => p.clone(),
        },
        other => other.clone(),
    }
}

/// `e{o/this}{v/x}`, with every parameter and local given a fresh slot.
fn instantiate(
    e: &Expr,
    this: ObjectId,
    scope: &mut HashMap<String, SlotId>,
    s: &mut State,
) -> Expr {
    let kind = match &e.kind {
        ExprKind::Let(x, _, init, body) => {
            let init = instantiate(init, this, scope, s);
            let slot = alloc_slot(s, Value::Unit);
            let saved = scope.insert(x.clone(), slot);
            let body = instantiate(body, this, scope, s);
            match saved {
                Some(old) => scope.insert(x.clone(), old),
                None => scope.remove(x),
            };
            let assign = Expr::new(ExprKind::Assign(Place::Slot(slot), Box::new(init)), e.span);
            ExprKind::Seq(Box::new(assign), Box::new(body))
        }
        ExprKind::Read(p) => ExprKind::Read(bind_place(p, this, scope)),
        ExprKind::Assign(p, r) => ExprKind::Assign(
            bind_place(p, this, scope),
            Box::new(instantiate(r, this, scope, s)),
        ),
        ExprKind::Call(r, m, args) => {
            let r = match r {
                Receiver::Object(Owner::This) => Receiver::Object(Owner::Obj(this)),
                Receiver::Place(p) => Receiver::Place(bind_place(p, this, scope)),
                other => other.clone(),
            };
            let args = args
                .iter()
                .map(|a| instantiate(a, this, scope, s))
                .collect();
            ExprKind::Call(r, m.clone(), args)
        }
        _ => {
            let mut out = e.clone();
            out.for_each_child_mut(|c| *c = instantiate(c, this, scope, s));
            return out;
        }
    };
    Expr::new(kind, e.span)
}

fn call_detail(o: ObjectId, m: &str, args: &[Value]) -> String {
    let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
    format!("{o}.{m}({})", args.join(", "))
}

fn binop(op: BinOp, l: &Value, r: &Value) -> Result<Value, RuntimeError> {
    Ok(match (op, l, r) {
        (BinOp::Add, Value::Int(a), Value::Int(b)) => Value::Int(a.wrapping_add(*b)),
        (BinOp::Sub, Value::Int(a), Value::Int(b)) => Value::Int(a.wrapping_sub(*b)),
        (BinOp::Le, Value::Int(a), Value::Int(b)) => Value::Bool(a <= b),
        (BinOp::Ge, Value::Int(a), Value::Int(b)) => Value::Bool(a >= b),
        (BinOp::Eq, a, b) => Value::Bool(a == b),
        (BinOp::Add, a, b) if matches!(a, Value::Str(_)) || matches!(b, Value::Str(_)) => {
            Value::Str(format!("{}{}", display_plain(a), display_plain(b)))
        }
        _ => return Err(RuntimeError::Stuck(format!("{l} {} {r}", op.symbol()))),
    })
}

/// Text written by `print`: strings without quotes.
pub(crate) fn display_plain(v: &Value) -> String {
    match v {
        Value::Str(s) => s.clone(),
        other => other.to_string(),
    }
}

fn stepped(rule: &'static str, detail: String) -> Result<StepOutcome, RuntimeError> {
    Ok(StepOutcome::Stepped {
        rule,
        detail,
        output: None,
    })
}

impl<'p> Machine<'p> {
    fn class_of(&self, s: &State, o: ObjectId) -> &'p ClassDecl {
        self.program
            .class(&s.record(o).class)
            .expect("heap classes come from the program")
    }

    fn method_of(&self, s: &State, o: ObjectId, m: &str) -> Result<&'p MethodDecl, RuntimeError> {
        self.class_of(s, o)
            .method(m)
            .ok_or_else(|| RuntimeError::Stuck(format!("{o} has no method {m}")))
    }

    /// Value stored at a place, without consuming it.
    fn peek(&self, s: &State, p: &Place) -> Result<Value, RuntimeError> {
        match p {
            Place::Field(Owner::Obj(o), f) => s
                .record(*o)
                .fields
                .get(f)
                .cloned()
                .ok_or_else(|| RuntimeError::Stuck(format!("{o} has no field {f}"))),
            Place::Slot(x) => Ok(s.slot(*x).clone()),
            other => Err(RuntimeError::Stuck(format!("unbound place {other:?}"))),
        }
    }

    fn write(&self, s: &mut State, p: &Place, v: Value) {
        match p {
            Place::Field(Owner::Obj(o), f) => {
                s.record_mut(*o).fields.insert(f.clone(), v);
            }
            Place::Slot(x) => s.slots[x.0 as usize] = v,
            _ => unreachable!("peek rejects unbound places first"),
        }
    }

    fn receiver(&self, s: &State, r: &Receiver) -> Result<ObjectId, RuntimeError> {
        match r {
            Receiver::Object(Owner::Obj(o)) => Ok(*o),
            Receiver::Place(p) => match self.peek(s, p)? {
                Value::Obj(o) => Ok(o),
                _ => Err(RuntimeError::Uninit(place_name(p))),
            },
            Receiver::Object(Owner::This) => Err(RuntimeError::Stuck("unbound this".into())),
        }
    }

    /// The object whose lock the next step of thread `tid` waits for.
    pub fn blocked_on(&self, s: &State, tid: usize) -> Option<ObjectId> {
        let (_, r) = decompose(&s.threads[tid].expr);
        let ExprKind::Call(recv @ Receiver::Place(_), m, _) = &r.kind else {
            return None;
        };
        let o = self.receiver(s, recv).ok()?;
        let decl = self.method_of(s, o, m).ok()?;
        (decl.sync && s.record(o).locked).then_some(o)
    }

    /// Reduces the redex of thread `tid` once.
    pub fn step(&self, s: &mut State, tid: usize) -> Result<StepOutcome, RuntimeError> {
        let mut expr = std::mem::replace(&mut s.threads[tid].expr, Expr::unit());
        let r = self.rewrite(s, redex_mut(&mut expr));
        s.threads[tid].expr = expr;
        r
    }

    fn rewrite(&self, s: &mut State, e: &mut Expr) -> Result<StepOutcome, RuntimeError> {
        let kind = std::mem::replace(&mut e.kind, ExprKind::Value(Value::Unit));
        let (kind, out) = self.reduce(s, kind)?;
        e.kind = kind;
        Ok(out)
    }

    fn reduce(
        &self,
        s: &mut State,
        kind: ExprKind,
    ) -> Result<(ExprKind, StepOutcome), RuntimeError> {
        use ExprKind as K;
        let out = |k: K, rule: &'static str, detail: String| {
            Ok((
                k,
                StepOutcome::Stepped {
                    rule,
                    detail,
                    output: None,
                },
            ))
        };
        match kind {
            K::Value(v) => Err(RuntimeError::Stuck(format!("value {v} has no redex"))),
            K::Read(p) => {
                let v = self.peek(s, &p)?;
                if v == Value::Uninit {
                    return Err(RuntimeError::Uninit(place_name(&p)));
                }
                let lin = s.qualifier(&v) == Qualifier::Lin;
                if lin {
                    self.write(s, &p, Value::Unit);
                }
                let rule = match (&p, lin) {
                    (Place::Slot(_), true) => "R-LinVar",
                    (Place::Slot(_), false) => "R-UnVar",
                    (_, true) => "R-LinField",
                    (_, false) => "R-UnField",
                };
                let detail = format!("{} -> {v}", place_name(&p));
                out(K::Value(v), rule, detail)
            }
            K::Seq(a, b) => {
                let detail = format!("discard {}", a.as_value().expect("seq redex"));
                out(b.kind, "R-Seq", detail)
            }
            K::Assign(p, r) => {
                let v = r.as_value().expect("assign redex").clone();
                self.peek(s, &p)?;
                let detail = format!("{} := {v}", place_name(&p));
                self.write(s, &p, v);
                out(K::Value(Value::Unit), "R-Assign", detail)
            }
            K::New(c) => {
                let o = allocate(self.program, s, &c);
                out(K::Value(Value::Obj(o)), "R-New", format!("{o} = new {c}"))
            }
            K::Call(recv, m, args) => self.call(s, recv, m, args),
            K::If(c, t, f) => {
                let b = match c.as_value() {
                    Some(Value::Bool(b)) => *b,
                    Some(v) => return Err(RuntimeError::Stuck(format!("if on {v}"))),
                    None => {
                        let (objs, b) = pending_bool(&c).expect("if redex");
                        for o in objs {
                            let rec = s.record_mut(o);
                            rec.usage = match rec.usage.unfold() {
                                Usage::Variant(l, r) => *if b { l } else { r },
                                u => {
                                    return Err(RuntimeError::Stuck(format!(
                                        "{o} resolved at non-variant usage {u}"
                                    )))
                                }
                            };
                        }
                        b
                    }
                };
                let (k, rule) = if b {
                    (t.kind, "R-IfTrue")
                } else {
                    (f.kind, "R-IfFalse")
                };
                out(k, rule, b.to_string())
            }
            K::While(c, b) => {
                let again = Expr::bare(K::While(c.clone(), b.clone()));
                let body = Expr::seq(*b, again);
                out(
                    K::If(c, Box::new(body), Box::new(Expr::unit())),
                    "R-While",
                    String::new(),
                )
            }
            K::Spawn(b) => {
                let id = s.threads.len();
                s.threads.push(ThreadState { id, expr: *b });
                out(K::Value(Value::Unit), "R-Spawn", format!("T{id}"))
            }
            K::Print(a) => {
                let line = display_plain(a.as_value().expect("print redex"));
                Ok((
                    K::Value(Value::Unit),
                    StepOutcome::Stepped {
                        rule: "R-Print",
                        detail: format!("{line:?}"),
                        output: Some(line),
                    },
                ))
            }
            K::BinOp(op, l, r) => {
                let (l, r) = (
                    l.as_value().expect("op redex"),
                    r.as_value().expect("op redex"),
                );
                let v = binop(op, l, r)?;
                let detail = format!("{l} {} {r} = {v}", op.symbol());
                out(K::Value(v), "R-Op", detail)
            }
            K::Let(x, ..) => Err(RuntimeError::Stuck(format!("uninstantiated local {x}"))),
            K::InSync(o, b) => {
                s.record_mut(o).locked = false;
                out(b.kind, "R-InSync", format!("release {o}"))
            }
            K::Active(o, m, b) => out(b.kind, "Active", format!("leave {o}.{m}")),
            K::Resolve(o, _) => Err(RuntimeError::Stuck(format!(
                "result of a call on {o} needs a conditional"
            ))),
        }
    }

    fn call(
        &self,
        s: &mut State,
        recv: Receiver,
        m: String,
        args: Vec<Expr>,
    ) -> Result<(ExprKind, StepOutcome), RuntimeError> {
        let o = self.receiver(s, &recv)?;
        let decl = self.method_of(s, o, &m)?;
        let vals: Vec<Value> = args
            .into_iter()
            .map(|a| match a.kind {
                ExprKind::Value(v) => v,
                _ => unreachable!("call redex has value arguments"),
            })
            .collect();
        let detail = call_detail(o, &m, &vals);
        let self_call = matches!(recv, Receiver::Object(_));
        let mut wrap_variant = false;
        if !self_call {
            if decl.sync && s.record(o).locked {
                return Ok((
                    ExprKind::Call(recv, m, vals.into_iter().map(Expr::value).collect()),
                    StepOutcome::Blocked(o),
                ));
            }
            let rec = s.record_mut(o);
            let cont = rec
                .usage
                .after_call(&m)
                .ok_or_else(|| RuntimeError::Unavailable {
                    object: o,
                    method: m.clone(),
                    usage: rec.usage.to_string(),
                })?;
            wrap_variant = matches!(cont.unfold(), Usage::Variant(..));
            rec.usage = cont;
        }
        let mut scope = HashMap::new();
        for (p, v) in decl.params.iter().zip(vals) {
            let slot = alloc_slot(s, v);
            scope.insert(p.name.clone(), slot);
        }
        let mut body = instantiate(&decl.body, o, &mut scope, s);
        let class = &s.record(o).class;
        if self.watch.contains(&(class.clone(), m.clone())) {
            body = Expr::bare(ExprKind::Active(o, m.clone(), Box::new(body)));
        }
        let rule = if self_call {
            "R-SelfCall"
        } else if decl.sync {
            s.record_mut(o).locked = true;
            body = Expr::bare(ExprKind::InSync(o, Box::new(body)));
            "R-SCall"
        } else {
            "R-Call"
        };
        if wrap_variant {
            body = Expr::bare(ExprKind::Resolve(o, Box::new(body)));
        }
        Ok((body.kind, stepped(rule, detail)?))
    }
}

fn place_name(p: &Place) -> String {
    match p {
        Place::Field(Owner::Obj(o), f) => format!("{o}.{f}"),
        Place::Field(Owner::This, f) => format!("this.{f}"),
        Place::Ident(x) => x.clone(),
        Place::Slot(x) => x.to_string(),
    }
}

/// Objects and slots a thread can reach: everything its expression names,
/// closed under slot contents and object fields.
fn reach(s: &State, e: &Expr, objs: &mut HashSet<ObjectId>, slots: &mut HashSet<SlotId>) {
    let mut todo = Vec::new();
    let place = |p: &Place, todo: &mut Vec<ObjectId>, slots: &mut HashSet<SlotId>| match p {
        Place::Field(Owner::Obj(o), _) => todo.push(*o),
        Place::Slot(x) if slots.insert(*x) => {
            if let Value::Obj(o) = s.slot(*x) {
                todo.push(*o);
            }
        }
        _ => {}
    };
    e.walk(&mut |x| match &x.kind {
        ExprKind::Value(Value::Obj(o))
        | ExprKind::InSync(o, _)
        | ExprKind::Resolve(o, _)
        | ExprKind::Active(o, _, _) => todo.push(*o),
        ExprKind::Read(p) | ExprKind::Assign(p, _) => place(p, &mut todo, slots),
        ExprKind::Call(r, _, _) => match r {
            Receiver::Object(Owner::Obj(o)) => todo.push(*o),
            Receiver::Place(p) => place(p, &mut todo, slots),
            _ => {}
        },
        _ => {}
    });
    while let Some(o) = todo.pop() {
        if objs.insert(o) {
            for v in s.record(o).fields.values() {
                if let Value::Obj(p) = v {
                    todo.push(*p);
                }
            }
        }
    }
}

/// Objects and slots the next step of `tid` reads or writes, or `None`
/// when the step changes the thread structure or a watched frame.
fn footprint(s: &State, tid: usize) -> Option<(Vec<ObjectId>, Vec<SlotId>)> {
    let (_, r) = decompose(&s.threads[tid].expr);
    let mut objs = Vec::new();
    let mut slots = Vec::new();
    let mut place = |p: &Place, objs: &mut Vec<ObjectId>| {
        let v = match p {
            Place::Field(Owner::Obj(o), f) => {
                objs.push(*o);
                s.record(*o).fields.get(f)
            }
            Place::Slot(x) => {
                slots.push(*x);
                Some(s.slot(*x))
            }
            _ => None,
        };
        // A linear read is destructive; whether it is depends on the usage.
        if let Some(Value::Obj(o)) = v {
            if s.record(*o).usage.qualifier() == Qualifier::Lin {
                objs.push(*o);
            }
        }
    };
    match &r.kind {
        ExprKind::Seq(..)
        | ExprKind::While(..)
        | ExprKind::BinOp(..)
        | ExprKind::Print(_)
        | ExprKind::New(_) => {}
        ExprKind::If(c, _, _) => {
            if let Some((os, _)) = pending_bool(c) {
                objs.extend(os);
            }
        }
        ExprKind::Read(p) | ExprKind::Assign(p, _) => place(p, &mut objs),
        ExprKind::Call(Receiver::Place(p), _, _) => place(p, &mut objs),
        ExprKind::Call(Receiver::Object(Owner::Obj(o)), _, _) | ExprKind::InSync(o, _) => {
            objs.push(*o)
        }
        _ => return None,
    }
    Some((objs, slots))
}

/// Whether the next step of `tid` touches nothing another thread can
/// reach, so it commutes with every step of the other threads.
pub(crate) fn is_local(s: &State, tid: usize) -> bool {
    let Some((objs, slots)) = footprint(s, tid) else {
        return false;
    };
    let mut others_o = HashSet::new();
    let mut others_s = HashSet::new();
    for t in s.threads.iter().filter(|t| t.id != tid) {
        reach(s, &t.expr, &mut others_o, &mut others_s);
    }
    objs.iter().all(|o| !others_o.contains(o)) && slots.iter().all(|x| !others_s.contains(x))
}
