//! Abstract syntax shared by the parser, the checker and the interpreter.
//!
//! Runtime-only forms (`InSync`, `Resolve`, `Active`, slots and object
//! references) live in the same tree so that a thread's expression is just
//! an [`Expr`]; the parser never produces them.

mod pretty;

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::Serialize;

pub use crate::usage::{free_usage_vars, Qualifier, Usage};
pub use pretty::{pretty_expr, pretty_program, pretty_type, pretty_usage};

/// 1-based source region. Spans are metadata: they never take part in
/// structural equality or hashing.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Span {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn new(start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Span {
        Span {
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }

    pub fn to(self, end: Span) -> Span {
        Span {
            end_line: end.end_line,
            end_col: end.end_col,
            ..self
        }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

/// Storage cell for a parameter or local of one method activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SlotId(pub u32);

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Unit,
    Boolean,
    Int,
    Str,
    Object(String, Usage),
}

impl Type {
    pub fn object(class: impl Into<String>, usage: Usage) -> Type {
        Type::Object(class.into(), usage)
    }

    pub fn is_object(&self) -> bool {
        matches!(self, Type::Object(..))
    }

    /// `q(t)`: base types are unrestricted, objects follow their usage.
    pub fn qualifier(&self) -> Qualifier {
        match self {
            Type::Object(_, u) => u.qualifier(),
            _ => Qualifier::Un,
        }
    }

    pub fn is_lin(&self) -> bool {
        self.qualifier() == Qualifier::Lin
    }

    pub fn is_un(&self) -> bool {
        self.qualifier() == Qualifier::Un
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_type(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Str(String),
    Obj(ObjectId),
    /// `⊥`, the content of an object field before its first assignment.
    Uninit,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("unit"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Obj(o) => write!(f, "{o}"),
            Value::Uninit => f.write_str("⊥"),
        }
    }
}

/// The object whose fields are addressed: `this` in source, a heap
/// reference once a method body has been instantiated.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Owner {
    This,
    Obj(ObjectId),
}

/// Anything that can be read, assigned, or used as a call receiver.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Place {
    Field(Owner, String),
    Ident(String),
    Slot(SlotId),
}

impl Place {
    pub fn this_field(f: impl Into<String>) -> Place {
        Place::Field(Owner::This, f.into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Receiver {
    /// A call directly on an object (`this.m()` in source), which never
    /// consults the usage.
    Object(Owner),
    /// A call through a field or identifier, governed by the usage.
    Place(Place),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Le,
    Ge,
    Eq,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Le | BinOp::Ge | BinOp::Eq)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Value(Value),
    Read(Place),
    Seq(Box<Expr>, Box<Expr>),
    Assign(Place, Box<Expr>),
    New(String),
    Call(Receiver, String, Vec<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    While(Box<Expr>, Box<Expr>),
    Spawn(Box<Expr>),
    Print(Box<Expr>),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    /// `T x = init; body`, where `body` is the rest of the enclosing block.
    Let(String, Type, Box<Expr>, Box<Expr>),
    /// Runtime: the body of a synchronized call holding the lock on the object.
    InSync(ObjectId, Box<Expr>),
    /// Runtime: a call whose continuation is a variant; the object's usage
    /// is resolved when the boolean result is consumed by a conditional.
    Resolve(ObjectId, Box<Expr>),
    /// Runtime instrumentation: an activation of a watched method.
    Active(ObjectId, String, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    /// Node without source position (runtime-built or test-built).
    pub fn bare(kind: ExprKind) -> Expr {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn value(v: Value) -> Expr {
        Expr::bare(ExprKind::Value(v))
    }

    pub fn unit() -> Expr {
        Expr::value(Value::Unit)
    }

    pub fn as_value(&self) -> Option<&Value> {
        match &self.kind {
            ExprKind::Value(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self.kind, ExprKind::Value(_))
    }

    pub fn seq(a: Expr, b: Expr) -> Expr {
        let span = a.span.to(b.span);
        Expr::new(ExprKind::Seq(Box::new(a), Box::new(b)), span)
    }

    /// Applies `f` to every direct subexpression.
    pub fn for_each_child(&self, mut f: impl FnMut(&Expr)) {
        match &self.kind {
            ExprKind::Value(_) | ExprKind::Read(_) | ExprKind::New(_) => {}
            ExprKind::Seq(a, b) | ExprKind::While(a, b) | ExprKind::BinOp(_, a, b) => {
                f(a);
                f(b);
            }
            ExprKind::Let(_, _, a, b) => {
                f(a);
                f(b);
            }
            ExprKind::Assign(_, e)
            | ExprKind::Spawn(e)
            | ExprKind::Print(e)
            | ExprKind::InSync(_, e)
            | ExprKind::Resolve(_, e)
            | ExprKind::Active(_, _, e) => f(e),
            ExprKind::Call(_, _, args) => args.iter().for_each(f),
            ExprKind::If(c, t, e) => {
                f(c);
                f(t);
                f(e);
            }
        }
    }

    pub fn for_each_child_mut(&mut self, mut f: impl FnMut(&mut Expr)) {
        match &mut self.kind {
            ExprKind::Value(_) | ExprKind::Read(_) | ExprKind::New(_) => {}
            ExprKind::Seq(a, b) | ExprKind::While(a, b) | ExprKind::BinOp(_, a, b) => {
                f(a);
                f(b);
            }
            ExprKind::Let(_, _, a, b) => {
                f(a);
                f(b);
            }
            ExprKind::Assign(_, e)
            | ExprKind::Spawn(e)
            | ExprKind::Print(e)
            | ExprKind::InSync(_, e)
            | ExprKind::Resolve(_, e)
            | ExprKind::Active(_, _, e) => f(e),
            ExprKind::Call(_, _, args) => args.iter_mut().for_each(f),
            ExprKind::If(c, t, e) => {
                f(c);
                f(t);
                f(e);
            }
        }
    }

    /// Pre-order walk over the whole tree.
    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        self.for_each_child(|c| c.walk(f));
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_expr(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDecl {
    pub sync: bool,
    pub ret: Type,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Expr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub usage: Usage,
    /// False when the usage was inserted by default rather than written.
    pub usage_declared: bool,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub span: Span,
}

impl ClassDecl {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Methods mentioned anywhere in the usage, i.e. visible to clients.
    pub fn usage_methods(&self) -> BTreeSet<String> {
        self.usage.labels()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub classes: Vec<ClassDecl>,
}

pub const MAIN_CLASS: &str = "Main";
pub const MAIN_METHOD: &str = "main";

impl Program {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn method(&self, class: &str, method: &str) -> Option<&MethodDecl> {
        self.class(class).and_then(|c| c.method(method))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_program(self))
    }
}
