//! Continuation-machine engine: runs CPS-converted programs on the frame
//! trampoline runtime.
//!
//! Coroutine function bodies execute as [`Executor`] frames: a suspendable
//! call pushes the callee's frame (after optionally extending the
//! continuation with the statements that follow the call) and returns to the
//! trampoline; `invoke(k, v)` stores the pending return value the next frame
//! picks up. Native functions — `main` included — run on an ordinary
//! recursive evaluator that shares the heap, the globals and the trace.

use std::collections::HashMap;

use coroc_runtime::{
    coroutine_create, coroutine_enter, coroutine_yield, Continuation, CoroutineState, EnterResult,
    Executor, Frame, FuncId, RuntimeError, RuntimeStats, Scheduler, SchedulerConfig, Value,
};

use crate::ast::{BinOp, Expr, ExprKind, Function, LValue, Stmt, Type};
use crate::builtins::{self, FIRST_USER_FUNC_ID};
use crate::cps::is_cps_call;
use crate::typeck::TypedProgram;

use super::{
    binop, init_globals, internal, tick, unop, Fault, FuncIds, Heap, Outcome, Slot, TraceEvent,
    CALL_DEPTH_LIMIT,
};

impl From<RuntimeError> for Fault {
    fn from(e: RuntimeError) -> Fault {
        match e {
            RuntimeError::CapacityOverflow(_) => Fault::FrameOverflow,
            RuntimeError::SelfOutsideCoroutine => Fault::SelfOutsideCoroutine,
            other => internal(other.to_string()),
        }
    }
}

/// Knobs for a machine run; the defaults match [`SchedulerConfig::new`].
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub fuel: u64,
    pub pool_max: usize,
    pub frame_limit: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            fuel: super::DEFAULT_FUEL,
            pool_max: coroc_runtime::DEFAULT_POOL_MAX,
            frame_limit: None,
        }
    }
}

/// Runs a converted program: `main` natively, then the schedule of resumes.
pub fn run(typed: &TypedProgram, schedule: &[u64], fuel: u64) -> Outcome {
    run_with(typed, schedule, RunOptions { fuel, ..RunOptions::default() }).0
}

/// [`run`], with scheduler knobs exposed and the runtime counters returned.
pub fn run_with(
    typed: &TypedProgram,
    schedule: &[u64],
    opts: RunOptions,
) -> (Outcome, RuntimeStats) {
    let mut config = SchedulerConfig::new(builtins::CO_YIELD);
    config.pool_max = opts.pool_max;
    config.frame_limit = opts.frame_limit;
    let mut sched = Scheduler::new(config);

    let mut m = Machine {
        typed,
        funcs: FuncIds::of(&typed.program),
        globals: HashMap::new(),
        heap: Heap::new(),
        trace: Vec::new(),
        fuel: opts.fuel,
        depth: 0,
        stepping: false,
    };
    let fault = m.drive(&mut sched, schedule).err();
    let outcome = Outcome {
        trace: m.trace,
        fault,
        coroutines_created: sched.created_count(),
    };
    (outcome, sched.stats)
}

enum Flow<'p> {
    Normal,
    Ret(i64),
    Jump(&'p str),
}

type Env<'p> = HashMap<&'p str, Slot>;

struct Machine<'p> {
    typed: &'p TypedProgram,
    funcs: FuncIds<'p>,
    globals: HashMap<&'p str, i64>,
    heap: Heap,
    trace: Vec<TraceEvent>,
    fuel: u64,
    depth: usize,
    /// True while the trampoline is running a coroutine; `co_enter` refuses
    /// to nest.
    stepping: bool,
}

impl<'p> Machine<'p> {
    fn drive(&mut self, sched: &mut Scheduler, schedule: &[u64]) -> Result<(), Fault> {
        self.globals = init_globals(&self.typed.program, &self.funcs, &mut self.heap)?;
        let main = self
            .funcs
            .id_of("main")
            .and_then(|id| self.funcs.function(id))
            .ok_or(Fault::MissingMain)?;
        if !main.params.is_empty() {
            return Err(internal("main takes parameters"));
        }
        if main.annotation.is_coroutine() {
            return Err(internal("main must be a native function"));
        }
        self.run_native(sched, main, vec![])?;
        for &ord in schedule {
            self.enter(sched, ord, 0)?;
        }
        Ok(())
    }

    /// `co_enter`: starts or resumes `ord` on the trampoline, emitting the
    /// enter/yield/term events. Not-enterable targets are skipped without an
    /// event.
    fn enter(&mut self, sched: &mut Scheduler, ord: u64, arg: i64) -> Result<(), Fault> {
        if self.stepping {
            return Err(Fault::EnterInsideCoroutine);
        }
        match sched.state(ord) {
            Some(CoroutineState::Created) | Some(CoroutineState::Yielded) => {}
            _ => return Ok(()),
        }
        self.trace.push(TraceEvent::Enter { coroutine: ord });
        self.stepping = true;
        let res = coroutine_enter(sched, self, ord, Value::Int(arg));
        self.stepping = false;
        match res? {
            EnterResult::Yielded => self.trace.push(TraceEvent::Yield { coroutine: ord }),
            EnterResult::Terminated => self.trace.push(TraceEvent::Term { coroutine: ord }),
        }
        Ok(())
    }

    fn create(&mut self, sched: &mut Scheduler, value: i64) -> Result<i64, Fault> {
        let id = self.funcs.resolve_value(value)?;
        let f = self.funcs.function(id).ok_or(Fault::NotAFunction)?;
        let value_params = f.params.iter().filter(|p| !matches!(p.ty, Type::Cont)).count();
        if !f.annotation.is_coroutine() || value_params != 1 || !f.ret.is_void() || f.body.is_none()
        {
            return Err(Fault::NotACoroutineEntry);
        }
        Ok(coroutine_create(sched, id) as i64)
    }

    /// Runs one converted coroutine function: binds the frame's arguments,
    /// executes the flat body, and returns the possibly-extended
    /// continuation once the body's terminal `return` is reached.
    fn exec_converted(
        &mut self,
        sched: &mut Scheduler,
        f: &'p Function,
        args: Vec<Value>,
        mut k: Continuation,
    ) -> Result<Continuation, Fault> {
        let Some(body) = f.body.as_ref() else {
            return Err(Fault::UnresolvedExtern { name: f.name.clone() });
        };
        if !f.annotation.is_coroutine() {
            return Err(internal(format!("frame for non-coroutine `{}`", f.name)));
        }
        let Some((kparam, vparams)) = f.params.split_last() else {
            return Err(internal(format!("converted `{}` has no parameters", f.name)));
        };
        if !matches!(kparam.ty, Type::Cont) {
            return Err(internal(format!("converted `{}` lacks a continuation parameter", f.name)));
        }
        let k_name = kparam
            .name
            .as_deref()
            .ok_or_else(|| internal("unnamed continuation parameter"))?;
        if args.len() != vparams.len() {
            return Err(Fault::SignatureMismatch);
        }
        let mut env: Env<'p> = HashMap::new();
        for (p, v) in vparams.iter().zip(args) {
            let name = p
                .name
                .as_deref()
                .ok_or_else(|| internal("unnamed parameter on a defined function"))?;
            let Value::Int(i) = v else {
                return Err(internal("frame argument is not an integer"));
            };
            env.insert(name, Slot::Val(i));
        }
        let owner = k.owner();
        if self.exec_flat(sched, &mut env, k_name, owner, &mut k, body)? {
            Ok(k)
        } else {
            Err(internal(format!("`{}` ended without a terminal return", f.name)))
        }
    }

    /// Executes converted-form statements; returns whether a `return` was
    /// reached.
    fn exec_flat(
        &mut self,
        sched: &mut Scheduler,
        env: &mut Env<'p>,
        k_name: &'p str,
        owner: u64,
        k: &mut Continuation,
        stmts: &'p [Stmt],
    ) -> Result<bool, Fault> {
        let kctx = Some(owner);
        // Once the continuation has been handed off — a frame pushed or the
        // live continuation invoked — only the terminal return may follow.
        let mut handed_off = false;
        for stmt in stmts {
            tick(&mut self.fuel)?;
            if handed_off && !matches!(stmt, Stmt::Return { value: None, .. }) {
                return Err(internal("statement after the continuation was handed off"));
            }
            match stmt {
                Stmt::VarDecl { name, init, .. } => {
                    let v = match init {
                        Some(e) => self.eval(sched, env, kctx, e)?,
                        None => 0,
                    };
                    env.insert(name.as_str(), Slot::Val(v));
                }
                Stmt::Assign { target, value, .. } => {
                    let v = self.eval(sched, env, kctx, value)?;
                    self.store(sched, env, kctx, target, v)?;
                }
                Stmt::Expr { expr, .. } => {
                    if is_cps_call(self.typed, expr) {
                        self.transfer(sched, env, k_name, kctx, k, expr)?;
                        handed_off = true;
                    } else {
                        self.eval(sched, env, kctx, expr)?;
                    }
                }
                Stmt::If { cond, then_branch, else_branch, .. } => {
                    let c = self.eval(sched, env, kctx, cond)?;
                    let done = if c != 0 {
                        self.exec_flat(sched, env, k_name, owner, k, then_branch)?
                    } else if let Some(else_branch) = else_branch {
                        self.exec_flat(sched, env, k_name, owner, k, else_branch)?
                    } else {
                        false
                    };
                    if done {
                        return Ok(true);
                    }
                }
                Stmt::Invoke { cont, value, .. } => {
                    if !matches!(&cont.kind, ExprKind::Var(n) if n == k_name) {
                        return Err(internal("invoke of a continuation other than the live one"));
                    }
                    if let Some(value) = value {
                        let v = self.eval(sched, env, kctx, value)?;
                        k.set_pending(Value::Int(v));
                    }
                    handed_off = true;
                }
                Stmt::Return { value: None, .. } => return Ok(true),
                Stmt::Return { value: Some(_), .. } => {
                    return Err(internal("value return survived conversion"))
                }
                Stmt::While { .. } | Stmt::Label { .. } | Stmt::Goto { .. } => {
                    return Err(internal("structured control survived conversion"))
                }
                Stmt::FuncDef(_) => return Err(internal("nested function survived lifting")),
            }
        }
        Ok(false)
    }

    /// A suspendable call in statement position: evaluate the value
    /// arguments, extend the continuation if the trailing argument pushes a
    /// frame, then either suspend (yield/sleep) or push the callee's frame.
    fn transfer(
        &mut self,
        sched: &mut Scheduler,
        env: &mut Env<'p>,
        k_name: &'p str,
        kctx: Option<u64>,
        k: &mut Continuation,
        call: &'p Expr,
    ) -> Result<(), Fault> {
        let ExprKind::Call { callee, args } = &call.kind else {
            return Err(internal("transfer is not a call"));
        };
        let (target, indirect) = self.resolve_target(sched, env, kctx, callee)?;
        if indirect {
            self.check_target_annotation(callee, target)?;
        }
        let ann = self.funcs.annotation(target).ok_or(Fault::NotAFunction)?;
        if !ann.is_coroutine() || ann.need_cont {
            return Err(Fault::NotAFunction);
        }
        let Some((kexpr, vargs)) = args.split_last() else {
            return Err(internal("transfer without a continuation argument"));
        };
        if !matches!(self.typed.expr_types.get(&kexpr.id), Some(Type::Cont)) {
            return Err(internal("transfer's last argument is not a continuation"));
        }
        let arity = self.funcs.value_arity(target).ok_or(Fault::NotAFunction)?;
        if vargs.len() != arity {
            return Err(Fault::SignatureMismatch);
        }
        let mut vals = Vec::with_capacity(vargs.len());
        for a in vargs {
            vals.push(Value::Int(self.eval(sched, env, kctx, a)?));
        }
        match &kexpr.kind {
            ExprKind::Var(n) if n == k_name => {}
            ExprKind::Push { func, args: pargs, cont, ret } => {
                if !matches!(&cont.kind, ExprKind::Var(n) if n == k_name) {
                    return Err(internal("push onto a continuation other than the live one"));
                }
                let fid = self
                    .funcs
                    .id_of(func)
                    .ok_or_else(|| internal(format!("push of unknown function `{func}`")))?;
                let mut pvals = Vec::with_capacity(pargs.len());
                let mut hole = None;
                for (i, pa) in pargs.iter().enumerate() {
                    if matches!(pa.kind, ExprKind::Hole) {
                        if hole.replace(i).is_some() {
                            return Err(internal("multiple holes in one push"));
                        }
                        pvals.push(Value::Int(0));
                    } else {
                        pvals.push(Value::Int(self.eval(sched, env, kctx, pa)?));
                    }
                }
                let parity = self.funcs.value_arity(fid).ok_or(Fault::NotAFunction)?;
                if pvals.len() != parity {
                    return Err(Fault::SignatureMismatch);
                }
                let frame = match (*ret, hole) {
                    (true, Some(at)) => Frame::with_return_slot(fid, pvals, at),
                    (false, None) => Frame::new(fid, pvals),
                    (true, None) => return Err(internal("push_ret without a hole")),
                    (false, Some(_)) => return Err(internal("hole in a plain push")),
                };
                k.push(frame, &mut sched.stats)?;
            }
            _ => {
                return Err(internal(
                    "transfer continuation is neither the live continuation nor a push",
                ))
            }
        }
        if target == builtins::CO_YIELD || target == builtins::CO_SLEEP {
            coroutine_yield(sched, k)?;
        } else {
            k.push(Frame::new(target, vals), &mut sched.stats)?;
        }
        Ok(())
    }

    fn run_native(
        &mut self,
        sched: &mut Scheduler,
        f: &'p Function,
        args: Vec<i64>,
    ) -> Result<i64, Fault> {
        let Some(body) = f.body.as_ref() else {
            return Err(Fault::UnresolvedExtern { name: f.name.clone() });
        };
        if f.annotation.is_coroutine() {
            return Err(internal(format!("`{}` run as a native function", f.name)));
        }
        if self.depth >= CALL_DEPTH_LIMIT {
            return Err(Fault::CallDepthExceeded);
        }
        if args.len() != f.params.len() {
            return Err(Fault::SignatureMismatch);
        }
        let mut env: Env<'p> = HashMap::new();
        for (p, v) in f.params.iter().zip(args) {
            let name = p
                .name
                .as_deref()
                .ok_or_else(|| internal("unnamed parameter on a defined function"))?;
            env.insert(name, Slot::Val(v));
        }
        self.depth += 1;
        let flow = self.run_body(sched, &mut env, body);
        self.depth -= 1;
        match flow? {
            Flow::Ret(v) => Ok(v),
            Flow::Normal => Ok(0),
            Flow::Jump(l) => Err(internal(format!("goto to unplaced label `{l}`"))),
        }
    }

    /// Runs a native function body, dispatching gotos to their top-level
    /// labels.
    fn run_body(
        &mut self,
        sched: &mut Scheduler,
        env: &mut Env<'p>,
        body: &'p [Stmt],
    ) -> Result<Flow<'p>, Fault> {
        let mut from = 0usize;
        loop {
            match self.exec_native(sched, env, &body[from..])? {
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

    fn exec_native(
        &mut self,
        sched: &mut Scheduler,
        env: &mut Env<'p>,
        stmts: &'p [Stmt],
    ) -> Result<Flow<'p>, Fault> {
        for stmt in stmts {
            tick(&mut self.fuel)?;
            match stmt {
                Stmt::VarDecl { name, init, .. } => {
                    let v = match init {
                        Some(e) => self.eval(sched, env, None, e)?,
                        None => 0,
                    };
                    env.insert(name.as_str(), Slot::Val(v));
                }
                Stmt::Assign { target, value, .. } => {
                    let v = self.eval(sched, env, None, value)?;
                    self.store(sched, env, None, target, v)?;
                }
                Stmt::Expr { expr, .. } => {
                    self.eval(sched, env, None, expr)?;
                }
                Stmt::If { cond, then_branch, else_branch, .. } => {
                    let flow = if self.eval(sched, env, None, cond)? != 0 {
                        self.exec_native(sched, env, then_branch)?
                    } else if let Some(else_branch) = else_branch {
                        self.exec_native(sched, env, else_branch)?
                    } else {
                        Flow::Normal
                    };
                    if !matches!(flow, Flow::Normal) {
                        return Ok(flow);
                    }
                }
                Stmt::While { cond, body, .. } => loop {
                    tick(&mut self.fuel)?;
                    if self.eval(sched, env, None, cond)? == 0 {
                        break;
                    }
                    match self.exec_native(sched, env, body)? {
                        Flow::Normal => {}
                        other => return Ok(other),
                    }
                },
                Stmt::Label { .. } => {}
                Stmt::Goto { label, .. } => return Ok(Flow::Jump(label.as_str())),
                Stmt::Return { value, .. } => {
                    let v = match value {
                        Some(e) => self.eval(sched, env, None, e)?,
                        None => 0,
                    };
                    return Ok(Flow::Ret(v));
                }
                Stmt::Invoke { .. } => {
                    return Err(internal("invoke in a native function"))
                }
                Stmt::FuncDef(_) => {
                    return Err(internal("nested function in a native function"))
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn store(
        &mut self,
        sched: &mut Scheduler,
        env: &mut Env<'p>,
        kctx: Option<u64>,
        target: &'p LValue,
        v: i64,
    ) -> Result<(), Fault> {
        match target {
            LValue::Var { name, .. } => {
                if let Some(slot) = env.get_mut(name.as_str()) {
                    match slot {
                        Slot::Val(cur) => *cur = v,
                        Slot::Cell(addr) => {
                            let a = *addr;
                            self.heap.write(a, v)?;
                        }
                    }
                } else if let Some(&addr) = self.globals.get(name.as_str()) {
                    self.heap.write(addr, v)?;
                } else {
                    return Err(internal(format!("assignment to unknown name `{name}`")));
                }
            }
            LValue::Deref { ptr, .. } => {
                let a = self.eval(sched, env, kctx, ptr)?;
                self.heap.write(a, v)?;
            }
            LValue::Index { base, offset, .. } => {
                let a = self.eval(sched, env, kctx, base)?.wrapping_add(*offset);
                self.heap.write(a, v)?;
            }
        }
        Ok(())
    }

    fn eval(
        &mut self,
        sched: &mut Scheduler,
        env: &mut Env<'p>,
        kctx: Option<u64>,
        e: &'p Expr,
    ) -> Result<i64, Fault> {
        match &e.kind {
            ExprKind::IntLit(v) => Ok(*v),
            ExprKind::Var(name) => self.load_var(env, name),
            ExprKind::Call { callee, args } => {
                if kctx.is_some() && is_cps_call(self.typed, e) {
                    return Err(internal("suspendable call buried inside an expression"));
                }
                self.eval_call(sched, env, kctx, callee, args)
            }
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                if self.eval(sched, env, kctx, lhs)? == 0 {
                    Ok(0)
                } else {
                    Ok((self.eval(sched, env, kctx, rhs)? != 0) as i64)
                }
            }
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                if self.eval(sched, env, kctx, lhs)? != 0 {
                    Ok(1)
                } else {
                    Ok((self.eval(sched, env, kctx, rhs)? != 0) as i64)
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(sched, env, kctx, lhs)?;
                let r = self.eval(sched, env, kctx, rhs)?;
                binop(*op, l, r)
            }
            ExprKind::Unary { op, operand } => {
                Ok(unop(*op, self.eval(sched, env, kctx, operand)?))
            }
            ExprKind::Deref(inner) => {
                let a = self.eval(sched, env, kctx, inner)?;
                self.heap.read(a)
            }
            ExprKind::Index { base, offset } => {
                let a = self.eval(sched, env, kctx, base)?.wrapping_add(*offset);
                self.heap.read(a)
            }
            ExprKind::AddrOf(name) => self.addr_of(env, name),
            ExprKind::AddrOfIndex { base, offset } => {
                Ok(self.eval(sched, env, kctx, base)?.wrapping_add(*offset))
            }
            ExprKind::Push { .. } | ExprKind::Hole => {
                Err(internal("continuation form outside a transfer"))
            }
        }
    }

    fn load_var(&mut self, env: &Env<'p>, name: &str) -> Result<i64, Fault> {
        if let Some(slot) = env.get(name) {
            return match slot {
                Slot::Val(v) => Ok(*v),
                Slot::Cell(a) => self.heap.read(*a),
            };
        }
        if let Some(&addr) = self.globals.get(name) {
            return self.heap.read(addr);
        }
        Err(internal(format!("read of unknown name `{name}`")))
    }

    /// `&name`: a local promotes to a heap cell on first use, a global is
    /// already a cell, a function is its id.
    fn addr_of(&mut self, env: &mut Env<'p>, name: &'p str) -> Result<i64, Fault> {
        if let Some(slot) = env.get_mut(name) {
            match slot {
                Slot::Cell(a) => return Ok(*a),
                Slot::Val(v) => {
                    let val = *v;
                    let addr = self.heap.alloc(1)?;
                    self.heap.write(addr, val)?;
                    *env.get_mut(name).expect("present above") = Slot::Cell(addr);
                    return Ok(addr);
                }
            }
        }
        if let Some(&addr) = self.globals.get(name) {
            return Ok(addr);
        }
        if let Some(id) = self.funcs.id_of(name) {
            return Ok(id as i64);
        }
        Err(internal(format!("address of unknown name `{name}`")))
    }

    fn eval_call(
        &mut self,
        sched: &mut Scheduler,
        env: &mut Env<'p>,
        kctx: Option<u64>,
        callee: &'p Expr,
        args: &'p [Expr],
    ) -> Result<i64, Fault> {
        let (target, indirect) = self.resolve_target(sched, env, kctx, callee)?;
        // The context probes take the live continuation as a hidden trailing
        // argument in converted code; answer them without evaluating it.
        if target == builtins::IN_COROUTINE {
            check_needcont_args(self.typed, args)?;
            return Ok(kctx.is_some() as i64);
        }
        if target == builtins::CO_SELF {
            check_needcont_args(self.typed, args)?;
            return kctx.map(|o| o as i64).ok_or(Fault::SelfOutsideCoroutine);
        }
        if indirect {
            self.check_target_annotation(callee, target)?;
        }
        let arity = self.funcs.value_arity(target).ok_or(Fault::NotAFunction)?;
        if args.len() != arity {
            return Err(Fault::SignatureMismatch);
        }
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(sched, env, kctx, a)?);
        }
        match target {
            builtins::PRINT => {
                self.trace.push(TraceEvent::Print { value: vals[0] });
                Ok(0)
            }
            builtins::CO_CREATE => self.create(sched, vals[0]),
            builtins::CO_ENTER => {
                self.enter(sched, vals[0] as u64, vals[1])?;
                Ok(0)
            }
            builtins::ALLOC => self.heap.alloc(vals[0]),
            builtins::CO_YIELD | builtins::CO_SLEEP => match kctx {
                None => Err(Fault::SuspendOutsideCoroutine),
                Some(_) => Err(internal("suspension outside a transfer")),
            },
            id => {
                let f = self.funcs.function(id).ok_or(Fault::NotAFunction)?;
                self.run_native(sched, f, vals)
            }
        }
    }

    fn resolve_target(
        &mut self,
        sched: &mut Scheduler,
        env: &mut Env<'p>,
        kctx: Option<u64>,
        callee: &'p Expr,
    ) -> Result<(u32, bool), Fault> {
        match &callee.kind {
            ExprKind::Var(name) => {
                if env.contains_key(name.as_str()) || self.globals.contains_key(name.as_str()) {
                    let v = self.load_var(env, name)?;
                    Ok((self.funcs.resolve_value(v)?, true))
                } else if let Some(id) = self.funcs.id_of(name) {
                    Ok((id, false))
                } else {
                    Err(internal(format!("call of unknown name `{name}`")))
                }
            }
            ExprKind::Deref(inner) => {
                let v = self.eval(sched, env, kctx, inner)?;
                Ok((self.funcs.resolve_value(v)?, true))
            }
            _ => Err(internal("unsupported callee form")),
        }
    }

    /// An indirect call must land on a function of the calling convention
    /// the pointer's type promised; an uninitialized pointer holds 0, which
    /// is a function id of the wrong kind for coroutine pointers.
    fn check_target_annotation(&self, callee: &Expr, target: u32) -> Result<(), Fault> {
        let Some(Type::Fun(ft)) = self.typed.expr_types.get(&callee.id) else {
            return Err(internal("indirect callee has no function type"));
        };
        let actual = self.funcs.annotation(target).ok_or(Fault::NotAFunction)?;
        if actual.kind != ft.annotation.kind {
            return Err(Fault::NotAFunction);
        }
        Ok(())
    }
}

/// The argument list of `in_coroutine`/`co_self`: empty in source form, the
/// live continuation alone in converted form.
fn check_needcont_args(typed: &TypedProgram, args: &[Expr]) -> Result<(), Fault> {
    match args {
        [] => Ok(()),
        [only] if matches!(typed.expr_types.get(&only.id), Some(Type::Cont)) => Ok(()),
        _ => Err(Fault::SignatureMismatch),
    }
}

impl<'p> Executor for Machine<'p> {
    type Error = Fault;

    fn execute(
        &mut self,
        sched: &mut Scheduler,
        func: FuncId,
        args: Vec<Value>,
        k: Continuation,
    ) -> Result<Continuation, Fault> {
        match func {
            builtins::CO_YIELD | builtins::CO_SLEEP => {
                let mut k = k;
                coroutine_yield(sched, &mut k)?;
                Ok(k)
            }
            f if f < FIRST_USER_FUNC_ID => {
                Err(internal(format!("native builtin id {f} popped as a frame")))
            }
            _ => {
                let f = self
                    .funcs
                    .function(func)
                    .ok_or_else(|| internal(format!("unknown function id {func}")))?;
                self.exec_converted(sched, f, args, k)
            }
        }
    }
}
