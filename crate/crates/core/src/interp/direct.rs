//! Reference interpreter: runs programs as written.
//!
//! Coroutine calls are ordinary calls. Each created coroutine is a pinned
//! future over the evaluator; `co_yield` returns `Poll::Pending` through
//! every nested evaluation, so a suspension anywhere below an enter
//! propagates to the enterer with the whole call chain kept alive inside the
//! future. The engine shares nothing with the frame runtime beyond the value
//! model, which is what makes its traces worth comparing against.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll, Waker};

use crate::ast::{BinOp, Expr, ExprKind, Function, LValue, Stmt, Type};
use crate::builtins;
use crate::typeck::TypedProgram;

use super::{
    binop, init_globals, internal, unop, Fault, FuncIds, Heap, Outcome, Slot, TraceEvent,
    CALL_DEPTH_LIMIT,
};

type BoxFut<'a, T> = Pin<Box<dyn Future<Output = T> + 'a>>;

enum Flow<'p> {
    Normal,
    Ret(i64),
    Jump(&'p str),
}

enum CoState<'p> {
    Created(&'p Function),
    Suspended(BoxFut<'p, Result<(), Fault>>),
    Done,
}

struct St<'p> {
    typed: &'p TypedProgram,
    funcs: FuncIds<'p>,
    globals: HashMap<&'p str, i64>,
    heap: RefCell<Heap>,
    trace: RefCell<Vec<TraceEvent>>,
    fuel: Cell<u64>,
    coros: RefCell<Vec<CoState<'p>>>,
    /// Ordinal of the coroutine currently being polled, if any.
    current: Cell<Option<u64>>,
    depth: Cell<usize>,
}

struct Env<'p> {
    vars: HashMap<&'p str, Slot>,
    in_coroutine_fn: bool,
}

/// Runs `main`, then applies `schedule` as a sequence of `co_enter(ord, 0)`
/// resumes. Entries naming coroutines that are missing or finished are
/// skipped silently, exactly as `co_enter` skips them.
pub fn run(typed: &TypedProgram, schedule: &[u64], fuel: u64) -> Outcome {
    let program = &typed.program;
    let funcs = FuncIds::of(program);
    let mut heap = Heap::new();
    let (globals, setup_fault) = match init_globals(program, &funcs, &mut heap) {
        Ok(g) => (g, None),
        Err(f) => (HashMap::new(), Some(f)),
    };
    let st = Rc::new(St {
        typed,
        funcs,
        globals,
        heap: RefCell::new(heap),
        trace: RefCell::new(Vec::new()),
        fuel: Cell::new(fuel),
        coros: RefCell::new(Vec::new()),
        current: Cell::new(None),
        depth: Cell::new(0),
    });
    let fault = match setup_fault {
        Some(f) => Some(f),
        None => drive(&st, schedule).err(),
    };
    let created = st.coros.borrow().len() as u64;
    st.coros.borrow_mut().clear();
    Outcome { trace: st.trace.take(), fault, coroutines_created: created }
}

fn drive<'p>(st: &Rc<St<'p>>, schedule: &[u64]) -> Result<(), Fault> {
    let main = st
        .funcs
        .id_of("main")
        .and_then(|id| st.funcs.function(id))
        .ok_or(Fault::MissingMain)?;
    if !main.params.is_empty() {
        return Err(internal("main takes parameters"));
    }
    if main.annotation.is_coroutine() {
        return Err(internal("main must be a native function"));
    }
    let mut fut = call_function(st.clone(), main, vec![]);
    match poll_once(fut.as_mut()) {
        Poll::Ready(r) => {
            r?;
        }
        Poll::Pending => return Err(internal("main suspended")),
    }
    for &ord in schedule {
        enter(st, ord, 0)?;
    }
    Ok(())
}

fn poll_once<T>(fut: Pin<&mut dyn Future<Output = T>>) -> Poll<T> {
    let mut cx = Context::from_waker(Waker::noop());
    fut.poll(&mut cx)
}

/// `co_enter`: starts or resumes `ord`, emitting the enter/yield/term
/// events. Not-enterable targets are skipped without an event.
fn enter<'p>(st: &Rc<St<'p>>, ord: u64, arg: i64) -> Result<(), Fault> {
    if st.current.get().is_some() {
        return Err(Fault::EnterInsideCoroutine);
    }
    let idx = ord as usize;
    let state = {
        let mut coros = st.coros.borrow_mut();
        let Some(slot) = coros.get_mut(idx) else { return Ok(()) };
        if matches!(slot, CoState::Done) {
            return Ok(());
        }
        std::mem::replace(slot, CoState::Done)
    };
    let mut fut: BoxFut<'p, Result<(), Fault>> = match state {
        CoState::Created(entry) => {
            let st2 = st.clone();
            Box::pin(async move { call_function(st2, entry, vec![arg]).await.map(|_| ()) })
        }
        CoState::Suspended(fut) => fut,
        CoState::Done => unreachable!("skipped above"),
    };
    st.trace.borrow_mut().push(TraceEvent::Enter { coroutine: ord });
    st.current.set(Some(ord));
    let res = poll_once(fut.as_mut());
    st.current.set(None);
    match res {
        Poll::Pending => {
            st.coros.borrow_mut()[idx] = CoState::Suspended(fut);
            st.trace.borrow_mut().push(TraceEvent::Yield { coroutine: ord });
            Ok(())
        }
        Poll::Ready(Ok(())) => {
            st.trace.borrow_mut().push(TraceEvent::Term { coroutine: ord });
            Ok(())
        }
        Poll::Ready(Err(f)) => Err(f),
    }
}

fn call_function<'p>(
    st: Rc<St<'p>>,
    f: &'p Function,
    args: Vec<i64>,
) -> BoxFut<'p, Result<i64, Fault>> {
    Box::pin(async move {
        let Some(body) = f.body.as_ref() else {
            return Err(Fault::UnresolvedExtern { name: f.name.clone() });
        };
        if st.depth.get() >= CALL_DEPTH_LIMIT {
            return Err(Fault::CallDepthExceeded);
        }
        if args.len() != f.params.len() {
            return Err(Fault::SignatureMismatch);
        }
        let mut env =
            Env { vars: HashMap::new(), in_coroutine_fn: f.annotation.is_coroutine() };
        for (p, v) in f.params.iter().zip(args) {
            let name = p
                .name
                .as_deref()
                .ok_or_else(|| internal("unnamed parameter on a defined function"))?;
            env.vars.insert(name, Slot::Val(v));
        }
        st.depth.set(st.depth.get() + 1);
        let flow = exec_body(&st, &mut env, body).await;
        st.depth.set(st.depth.get() - 1);
        match flow? {
            Flow::Ret(v) => Ok(v),
            Flow::Normal => Ok(0),
            Flow::Jump(l) => Err(internal(format!("goto to unplaced label `{l}`"))),
        }
    })
}

/// Runs a function body, dispatching gotos to their top-level labels.
async fn exec_body<'p>(
    st: &Rc<St<'p>>,
    env: &mut Env<'p>,
    body: &'p [Stmt],
) -> Result<Flow<'p>, Fault> {
    let mut from = 0usize;
    loop {
        match exec_stmts(st, env, &body[from..]).await? {
            Flow::Jump(label) => {
                let at = body
                    .iter()
                    .position(|s| matches!(s, Stmt::Label { name, .. } if name == label))
                    .ok_or_else(|| internal(format!("goto to unknown label `{label}`")))?;
                from = at + 1;
            }
            other => return Ok(other),
        }
    }
}

fn exec_stmts<'p: 'a, 'a>(
    st: &'a Rc<St<'p>>,
    env: &'a mut Env<'p>,
    stmts: &'p [Stmt],
) -> BoxFut<'a, Result<Flow<'p>, Fault>> {
    Box::pin(async move {
        for stmt in stmts {
            tick(st)?;
            match stmt {
                Stmt::VarDecl { name, init, .. } => {
                    let v = match init {
                        Some(e) => eval(st, env, e).await?,
                        None => 0,
                    };
                    env.vars.insert(name.as_str(), Slot::Val(v));
                }
                Stmt::Assign { target, value, .. } => {
                    let v = eval(st, env, value).await?;
                    store(st, env, target, v).await?;
                }
                Stmt::Expr { expr, .. } => {
                    eval(st, env, expr).await?;
                }
                Stmt::If { cond, then_branch, else_branch, .. } => {
                    let flow = if eval(st, env, cond).await? != 0 {
                        exec_stmts(st, env, then_branch).await?
                    } else if let Some(else_branch) = else_branch {
                        exec_stmts(st, env, else_branch).await?
                    } else {
                        Flow::Normal
                    };
                    if !matches!(flow, Flow::Normal) {
                        return Ok(flow);
                    }
                }
                Stmt::While { cond, body, .. } => loop {
                    tick(st)?;
                    if eval(st, env, cond).await? == 0 {
                        break;
                    }
                    match exec_stmts(st, env, body).await? {
                        Flow::Normal => {}
                        other => return Ok(other),
                    }
                },
                Stmt::Label { .. } => {}
                Stmt::Goto { label, .. } => return Ok(Flow::Jump(label.as_str())),
                Stmt::Return { value, .. } => {
                    let v = match value {
                        Some(e) => eval(st, env, e).await?,
                        None => 0,
                    };
                    return Ok(Flow::Ret(v));
                }
                Stmt::Invoke { .. } => {
                    return Err(internal("invoke outside the converted form"))
                }
                Stmt::FuncDef(_) => {
                    return Err(internal("nested function outside the split form"))
                }
            }
        }
        Ok(Flow::Normal)
    })
}

async fn store<'p>(
    st: &Rc<St<'p>>,
    env: &mut Env<'p>,
    target: &'p LValue,
    v: i64,
) -> Result<(), Fault> {
    match target {
        LValue::Var { name, .. } => {
            if let Some(slot) = env.vars.get_mut(name.as_str()) {
                match slot {
                    Slot::Val(cur) => *cur = v,
                    Slot::Cell(addr) => {
                        let a = *addr;
                        st.heap.borrow_mut().write(a, v)?;
                    }
                }
            } else if let Some(&addr) = st.globals.get(name.as_str()) {
                st.heap.borrow_mut().write(addr, v)?;
            } else {
                return Err(internal(format!("assignment to unknown name `{name}`")));
            }
        }
        LValue::Deref { ptr, .. } => {
            let a = eval(st, env, ptr).await?;
            st.heap.borrow_mut().write(a, v)?;
        }
        LValue::Index { base, offset, .. } => {
            let a = eval(st, env, base).await?.wrapping_add(*offset);
            st.heap.borrow_mut().write(a, v)?;
        }
    }
    Ok(())
}

fn eval<'p: 'a, 'a>(
    st: &'a Rc<St<'p>>,
    env: &'a mut Env<'p>,
    e: &'p Expr,
) -> BoxFut<'a, Result<i64, Fault>> {
    Box::pin(async move {
        match &e.kind {
            ExprKind::IntLit(v) => Ok(*v),
            ExprKind::Var(name) => load_var(st, env, name),
            ExprKind::Call { callee, args } => eval_call(st, env, callee, args).await,
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                if eval(st, env, lhs).await? == 0 {
                    Ok(0)
                } else {
                    Ok((eval(st, env, rhs).await? != 0) as i64)
                }
            }
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                if eval(st, env, lhs).await? != 0 {
                    Ok(1)
                } else {
                    Ok((eval(st, env, rhs).await? != 0) as i64)
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = eval(st, env, lhs).await?;
                let r = eval(st, env, rhs).await?;
                binop(*op, l, r)
            }
            ExprKind::Unary { op, operand } => Ok(unop(*op, eval(st, env, operand).await?)),
            ExprKind::Deref(inner) => {
                let a = eval(st, env, inner).await?;
                st.heap.borrow().read(a)
            }
            ExprKind::Index { base, offset } => {
                let a = eval(st, env, base).await?.wrapping_add(*offset);
                st.heap.borrow().read(a)
            }
            ExprKind::AddrOf(name) => addr_of(st, env, name),
            ExprKind::AddrOfIndex { base, offset } => {
                Ok(eval(st, env, base).await?.wrapping_add(*offset))
            }
            ExprKind::Push { .. } | ExprKind::Hole => {
                Err(internal("continuation form outside the converted form"))
            }
        }
    })
}

fn load_var(st: &Rc<St<'_>>, env: &Env<'_>, name: &str) -> Result<i64, Fault> {
    if let Some(slot) = env.vars.get(name) {
        return match slot {
            Slot::Val(v) => Ok(*v),
            Slot::Cell(a) => st.heap.borrow().read(*a),
        };
    }
    if let Some(&addr) = st.globals.get(name) {
        return st.heap.borrow().read(addr);
    }
    Err(internal(format!("read of unknown name `{name}`")))
}

/// `&name`: a local promotes to a heap cell on first use, a global is
/// already a cell, a function is its id.
fn addr_of<'p>(st: &Rc<St<'p>>, env: &mut Env<'p>, name: &'p str) -> Result<i64, Fault> {
    if let Some(slot) = env.vars.get_mut(name) {
        match slot {
            Slot::Cell(a) => return Ok(*a),
            Slot::Val(v) => {
                let val = *v;
                let addr = {
                    let mut heap = st.heap.borrow_mut();
                    let a = heap.alloc(1)?;
                    heap.write(a, val)?;
                    a
                };
                *slot = Slot::Cell(addr);
                return Ok(addr);
            }
        }
    }
    if let Some(&addr) = st.globals.get(name) {
        return Ok(addr);
    }
    if let Some(id) = st.funcs.id_of(name) {
        return Ok(id as i64);
    }
    Err(internal(format!("address of unknown name `{name}`")))
}

async fn eval_call<'p>(
    st: &Rc<St<'p>>,
    env: &mut Env<'p>,
    callee: &'p Expr,
    args: &'p [Expr],
) -> Result<i64, Fault> {
    let (target, indirect) = match &callee.kind {
        ExprKind::Var(name) => {
            if env.vars.contains_key(name.as_str()) || st.globals.contains_key(name.as_str()) {
                let v = load_var(st, env, name)?;
                (st.funcs.resolve_value(v)?, true)
            } else if let Some(id) = st.funcs.id_of(name) {
                (id, false)
            } else {
                return Err(internal(format!("call of unknown name `{name}`")));
            }
        }
        ExprKind::Deref(inner) => {
            let v = eval(st, env, inner).await?;
            (st.funcs.resolve_value(v)?, true)
        }
        _ => return Err(internal("unsupported callee form")),
    };
    if indirect {
        check_target_annotation(st, callee, target)?;
    }
    let arity = st.funcs.value_arity(target).ok_or(Fault::NotAFunction)?;
    if args.len() != arity {
        return Err(Fault::SignatureMismatch);
    }
    let mut vals = Vec::with_capacity(args.len());
    for a in args {
        vals.push(eval(st, env, a).await?);
    }
    dispatch(st, env, target, vals).await
}

/// An indirect call must land on a function of the calling convention the
/// pointer's type promised; an uninitialized pointer holds 0, which is a
/// function id of the wrong kind for coroutine pointers.
fn check_target_annotation(st: &Rc<St<'_>>, callee: &Expr, target: u32) -> Result<(), Fault> {
    let Some(Type::Fun(ft)) = st.typed.expr_types.get(&callee.id) else {
        return Err(internal("indirect callee has no function type"));
    };
    let actual = st.funcs.annotation(target).ok_or(Fault::NotAFunction)?;
    if actual.kind != ft.annotation.kind {
        return Err(Fault::NotAFunction);
    }
    Ok(())
}

async fn dispatch<'p>(
    st: &Rc<St<'p>>,
    env: &mut Env<'p>,
    target: u32,
    vals: Vec<i64>,
) -> Result<i64, Fault> {
    match target {
        builtins::PRINT => {
            st.trace.borrow_mut().push(TraceEvent::Print { value: vals[0] });
            Ok(0)
        }
        builtins::CO_YIELD | builtins::CO_SLEEP => {
            suspend(st).await?;
            Ok(0)
        }
        builtins::CO_CREATE => create(st, vals[0]),
        builtins::CO_ENTER => {
            enter(st, vals[0] as u64, vals[1])?;
            Ok(0)
        }
        builtins::IN_COROUTINE => Ok(env.in_coroutine_fn as i64),
        builtins::CO_SELF => {
            if !env.in_coroutine_fn {
                return Err(Fault::SelfOutsideCoroutine);
            }
            st.current.get().map(|c| c as i64).ok_or(Fault::SelfOutsideCoroutine)
        }
        builtins::ALLOC => st.heap.borrow_mut().alloc(vals[0]),
        id => {
            let f = st.funcs.function(id).ok_or(Fault::NotAFunction)?;
            call_function(st.clone(), f, vals).await
        }
    }
}

async fn suspend(st: &Rc<St<'_>>) -> Result<(), Fault> {
    if st.current.get().is_none() {
        return Err(Fault::SuspendOutsideCoroutine);
    }
    YieldOnce(false).await;
    Ok(())
}

fn create<'p>(st: &Rc<St<'p>>, value: i64) -> Result<i64, Fault> {
    let id = st.funcs.resolve_value(value)?;
    let f = st.funcs.function(id).ok_or(Fault::NotAFunction)?;
    let value_params = f.params.iter().filter(|p| !matches!(p.ty, Type::Cont)).count();
    if !f.annotation.is_coroutine() || value_params != 1 || !f.ret.is_void() || f.body.is_none() {
        return Err(Fault::NotACoroutineEntry);
    }
    let mut coros = st.coros.borrow_mut();
    let ord = coros.len() as i64;
    coros.push(CoState::Created(f));
    Ok(ord)
}

fn tick(st: &Rc<St<'_>>) -> Result<(), Fault> {
    let fuel = st.fuel.get();
    if fuel == 0 {
        return Err(Fault::FuelExhausted);
    }
    st.fuel.set(fuel - 1);
    Ok(())
}

struct YieldOnce(bool);

impl Future for YieldOnce {
    type Output = ();
    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<()> {
        if self.0 {
            Poll::Ready(())
        } else {
            self.0 = true;
            Poll::Pending
        }
    }
}
