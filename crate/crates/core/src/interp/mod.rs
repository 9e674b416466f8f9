//! Execution engines sharing one observable-behavior model.
//!
//! Two engines run programs: [`direct`] interprets source programs as
//! written, treating coroutine calls as ordinary calls and suspending by
//! polling, while [`machine`] runs CPS-converted programs on the frame
//! trampoline runtime. Both produce an [`Outcome`] — the event trace plus an
//! optional fault — over the same value model: every value is an `i64`
//! (function ids and heap addresses included), the heap is a flat array of
//! cells with address 0 permanently invalid, and arithmetic wraps.
//!
//! [`difftest`] drives both engines over enumerated resume schedules and
//! compares outcomes event for event.

pub mod difftest;
pub mod direct;
pub mod machine;
mod trace;

pub use trace::TraceEvent;

use std::collections::HashMap;

use serde::Serialize;

use crate::ast::{Annotation, Expr, ExprKind, Function, Program, Type, UnOp};
use crate::builtins::{self, FIRST_USER_FUNC_ID};

/// Default statement budget for a run.
pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Maximum heap cells a run may allocate.
pub const HEAP_LIMIT: usize = 1 << 22;

/// Maximum language-level call nesting. Both engines execute calls on the
/// host stack, so this must keep debug-build recursion within a default
/// 2 MiB thread stack.
pub const CALL_DEPTH_LIMIT: usize = 128;

/// A run fault. Faults carry no positions or addresses: both engines must
/// report the same fault at the same program point, and raw addresses are an
/// engine-internal layout detail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fault {
    DivideByZero,
    BadPointer,
    BadAllocSize { size: i64 },
    OutOfMemory,
    NotAFunction,
    NotACoroutineEntry,
    SignatureMismatch,
    UnresolvedExtern { name: String },
    MissingMain,
    SuspendOutsideCoroutine,
    SelfOutsideCoroutine,
    EnterInsideCoroutine,
    CallDepthExceeded,
    FrameOverflow,
    FuelExhausted,
    Internal { message: String },
}

impl std::fmt::Display for Fault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fault::DivideByZero => write!(f, "division by zero"),
            Fault::BadPointer => write!(f, "read or write through an invalid pointer"),
            Fault::BadAllocSize { size } => write!(f, "alloc of non-positive size {size}"),
            Fault::OutOfMemory => write!(f, "heap limit exceeded"),
            Fault::NotAFunction => write!(f, "call through a value that is no function"),
            Fault::NotACoroutineEntry => {
                write!(f, "co_create of a function that is no coroutine entry")
            }
            Fault::SignatureMismatch => write!(f, "call with the wrong number of arguments"),
            Fault::UnresolvedExtern { name } => write!(f, "call of extern `{name}` with no body"),
            Fault::MissingMain => write!(f, "the program defines no main function"),
            Fault::SuspendOutsideCoroutine => write!(f, "suspension outside any coroutine"),
            Fault::SelfOutsideCoroutine => write!(f, "co_self outside any coroutine"),
            Fault::EnterInsideCoroutine => write!(f, "co_enter while a coroutine is running"),
            Fault::CallDepthExceeded => write!(f, "call depth limit exceeded"),
            Fault::FrameOverflow => write!(f, "continuation frame limit exceeded"),
            Fault::FuelExhausted => write!(f, "fuel exhausted"),
            Fault::Internal { message } => write!(f, "internal interpreter error: {message}"),
        }
    }
}

/// What a run produced: the observable event trace, the fault that ended it
/// early (if any), and how many coroutines were created along the way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub trace: Vec<TraceEvent>,
    pub fault: Option<Fault>,
    pub coroutines_created: u64,
}

impl Outcome {
    pub fn is_clean(&self) -> bool {
        self.fault.is_none()
    }
}

/// The per-run heap: index 0 is reserved so that 0 — the value of every
/// uninitialized pointer — is never a valid address.
pub(crate) struct Heap {
    cells: Vec<i64>,
}

impl Heap {
    pub(crate) fn new() -> Heap {
        Heap { cells: vec![0] }
    }

    pub(crate) fn alloc(&mut self, size: i64) -> Result<i64, Fault> {
        if size <= 0 {
            return Err(Fault::BadAllocSize { size });
        }
        let addr = self.cells.len();
        if size as u64 > (HEAP_LIMIT - addr) as u64 {
            return Err(Fault::OutOfMemory);
        }
        self.cells.resize(addr + size as usize, 0);
        Ok(addr as i64)
    }

    pub(crate) fn read(&self, addr: i64) -> Result<i64, Fault> {
        self.index(addr).map(|i| self.cells[i])
    }

    pub(crate) fn write(&mut self, addr: i64, value: i64) -> Result<(), Fault> {
        let i = self.index(addr)?;
        self.cells[i] = value;
        Ok(())
    }

    fn index(&self, addr: i64) -> Result<usize, Fault> {
        if addr < 1 || addr >= self.cells.len() as i64 {
            return Err(Fault::BadPointer);
        }
        Ok(addr as usize)
    }
}

/// Wrapping integer arithmetic; `&&`/`||` arms are the already-evaluated
/// fallbacks — engines short-circuit before calling this.
pub(crate) fn binop(op: crate::ast::BinOp, l: i64, r: i64) -> Result<i64, Fault> {
    use crate::ast::BinOp::*;
    Ok(match op {
        Add => l.wrapping_add(r),
        Sub => l.wrapping_sub(r),
        Mul => l.wrapping_mul(r),
        Div => {
            if r == 0 {
                return Err(Fault::DivideByZero);
            }
            l.wrapping_div(r)
        }
        Mod => {
            if r == 0 {
                return Err(Fault::DivideByZero);
            }
            l.wrapping_rem(r)
        }
        Eq => (l == r) as i64,
        Ne => (l != r) as i64,
        Lt => (l < r) as i64,
        Le => (l <= r) as i64,
        Gt => (l > r) as i64,
        Ge => (l >= r) as i64,
        And => (l != 0 && r != 0) as i64,
        Or => (l != 0 || r != 0) as i64,
    })
}

pub(crate) fn unop(op: UnOp, v: i64) -> i64 {
    match op {
        UnOp::Neg => 0i64.wrapping_sub(v),
        UnOp::Not => (v == 0) as i64,
    }
}

/// A local variable: a plain value, or a heap cell once its address was
/// taken.
pub(crate) enum Slot {
    Val(i64),
    Cell(i64),
}

/// Function numbering shared by both engines: builtins keep their fixed ids,
/// user functions are numbered from [`FIRST_USER_FUNC_ID`] in item order.
pub(crate) struct FuncIds<'p> {
    by_name: HashMap<&'p str, u32>,
    by_id: HashMap<u32, &'p Function>,
}

impl<'p> FuncIds<'p> {
    pub(crate) fn of(program: &'p Program) -> FuncIds<'p> {
        let mut by_name = HashMap::new();
        let mut by_id = HashMap::new();
        for b in builtins::builtin_table() {
            by_name.insert(b.name, b.id);
        }
        let mut next = FIRST_USER_FUNC_ID;
        for f in program.functions() {
            if builtins::is_builtin(&f.name) {
                continue;
            }
            by_name.insert(f.name.as_str(), next);
            by_id.insert(next, f);
            next += 1;
        }
        FuncIds { by_name, by_id }
    }

    pub(crate) fn id_of(&self, name: &str) -> Option<u32> {
        self.by_name.get(name).copied()
    }

    pub(crate) fn function(&self, id: u32) -> Option<&'p Function> {
        self.by_id.get(&id).copied()
    }

    /// Resolves a function value for an indirect call, checking that the id
    /// names a user function at all.
    pub(crate) fn resolve_value(&self, value: i64) -> Result<u32, Fault> {
        let id = u32::try_from(value).map_err(|_| Fault::NotAFunction)?;
        if id < FIRST_USER_FUNC_ID || self.by_id.contains_key(&id) {
            Ok(id)
        } else {
            Err(Fault::NotAFunction)
        }
    }

    /// The annotation a call through `id` actually lands on.
    pub(crate) fn annotation(&self, id: u32) -> Option<Annotation> {
        if id < FIRST_USER_FUNC_ID {
            builtins::builtin_table().into_iter().find(|b| b.id == id).map(|b| b.ty.annotation)
        } else {
            self.function(id).map(|f| f.annotation)
        }
    }

    /// Number of value arguments a call through `id` must pass. For converted
    /// coroutine functions the trailing continuation parameter is not a value
    /// argument.
    pub(crate) fn value_arity(&self, id: u32) -> Option<usize> {
        if id < FIRST_USER_FUNC_ID {
            return builtins::builtin_table()
                .into_iter()
                .find(|b| b.id == id)
                .map(|b| b.ty.params.len());
        }
        self.function(id).map(|f| {
            f.params.iter().filter(|p| !matches!(p.ty, Type::Cont)).count()
        })
    }
}

/// Lays out one heap cell per global, in declaration order, and evaluates
/// the constant initializers. Returns name → cell address.
pub(crate) fn init_globals<'p>(
    program: &'p Program,
    funcs: &FuncIds<'p>,
    heap: &mut Heap,
) -> Result<HashMap<&'p str, i64>, Fault> {
    let mut cells = HashMap::new();
    for g in program.globals() {
        let addr = heap.alloc(1)?;
        let value = match &g.init {
            None => 0,
            Some(e) => const_value(e, funcs)?,
        };
        heap.write(addr, value)?;
        cells.insert(g.name.as_str(), addr);
    }
    Ok(cells)
}

fn const_value(e: &Expr, funcs: &FuncIds<'_>) -> Result<i64, Fault> {
    match &e.kind {
        ExprKind::IntLit(v) => Ok(*v),
        ExprKind::Unary { op: UnOp::Neg, operand } => {
            Ok(0i64.wrapping_sub(const_value(operand, funcs)?))
        }
        ExprKind::AddrOf(name) => funcs
            .id_of(name)
            .map(|id| id as i64)
            .ok_or_else(|| internal(format!("global initializer names unknown function `{name}`"))),
        _ => Err(internal("global initializer is not constant".to_string())),
    }
}

pub(crate) fn internal(message: impl Into<String>) -> Fault {
    Fault::Internal { message: message.into() }
}

/// Shared fuel bookkeeping.
pub(crate) fn tick(fuel: &mut u64) -> Result<(), Fault> {
    if *fuel == 0 {
        return Err(Fault::FuelExhausted);
    }
    *fuel -= 1;
    Ok(())
}
