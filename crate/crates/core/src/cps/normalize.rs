//! Flattens coroutine function bodies into label/goto form and hoists every
//! suspendable call into a statement of its own.
//!
//! After this pass a coroutine body is a flat list of declarations,
//! assignments, calls, `if (c) goto L;` tests, gotos, labels, and returns.
//! A call that can suspend appears only as `f(...);`, `t = f(...);`, or
//! `return f(...);`, and always with argument expressions that are free of
//! further suspendable calls.
//!
//! Hoisting pins evaluation order: when a statement suspends partway
//! through, everything the original expression would have evaluated before
//! the suspension point (calls, pointer loads, global reads) is captured in
//! temporaries first, so a coroutine that writes shared state cannot change
//! the meaning of the expression it was called from. Short-circuit operands
//! containing suspendable calls become explicit conditional jumps.

use crate::ast::{
    BinOp, Expr, ExprKind, Function, LValue, Pos, Program, Stmt, Type, UnOp, GENERATED_PREFIX,
};
use crate::error::LangError;
use crate::typeck::TypedProgram;

use super::{contains_cps_call, is_cps_call};

pub fn normalize(typed: &TypedProgram) -> Result<Program, LangError> {
    let mut program = typed.program.clone();
    let globals: Vec<String> = program.globals().map(|g| g.name.clone()).collect();
    for f in program.functions_mut() {
        if f.annotation.is_coroutine() && f.is_defined() {
            let mut n = Normalizer::new(typed, &globals, f);
            n.run(f);
        }
    }
    program.assign_ids();
    Ok(program)
}

struct Normalizer<'a> {
    typed: &'a TypedProgram,
    globals: &'a [String],
    next_label: u32,
    next_temp: u32,
    ret: Type,
}

impl<'a> Normalizer<'a> {
    fn new(typed: &'a TypedProgram, globals: &'a [String], f: &Function) -> Self {
        let body = f.body.as_deref().unwrap_or(&[]);
        Normalizer {
            typed,
            globals,
            next_label: next_generated_index(body, ""),
            next_temp: next_generated_index(body, "t"),
            ret: f.ret.clone(),
        }
    }

    fn run(&mut self, f: &mut Function) {
        let body = f.body.take().expect("defined function");
        let flat = self.lower(body);
        let mut out = Vec::with_capacity(flat.len());
        for stmt in flat {
            self.hoist(stmt, &mut out);
        }
        match out.last() {
            Some(Stmt::Return { .. }) | Some(Stmt::Goto { .. }) => {}
            _ => {
                let pos = f.pos;
                let value =
                    if self.ret.is_void() { None } else { Some(Expr::int(0, pos)) };
                out.push(Stmt::Return { value, pos });
            }
        }
        f.body = Some(out);
    }

    fn fresh_label(&mut self) -> String {
        let n = self.next_label;
        self.next_label += 1;
        format!("{GENERATED_PREFIX}{n}")
    }

    fn fresh_temp(&mut self) -> String {
        let n = self.next_temp;
        self.next_temp += 1;
        format!("{GENERATED_PREFIX}t{n}")
    }

    /// Structured control flow to labels and gotos. Conditions are carried
    /// over untouched; the hoisting pass cleans them up afterwards.
    fn lower(&mut self, stmts: Vec<Stmt>) -> Vec<Stmt> {
        let mut out = Vec::with_capacity(stmts.len());
        for stmt in stmts {
            match stmt {
                Stmt::While { cond, body, pos } => {
                    let head = self.fresh_label();
                    let end = self.fresh_label();
                    out.push(Stmt::Label { name: head.clone(), pos });
                    out.push(if_goto(negate(cond), end.clone(), pos));
                    out.extend(self.lower(body));
                    out.push(Stmt::Goto { label: head, pos });
                    out.push(Stmt::Label { name: end, pos });
                }
                Stmt::If { cond, then_branch, else_branch, pos } => {
                    let direct_goto = else_branch.is_none()
                        && matches!(then_branch.as_slice(), [Stmt::Goto { .. }]);
                    if direct_goto {
                        let Some(Stmt::Goto { label, .. }) = then_branch.into_iter().next()
                        else {
                            unreachable!()
                        };
                        out.push(if_goto(cond, label, pos));
                    } else if let Some(els) = else_branch {
                        let alt = self.fresh_label();
                        let end = self.fresh_label();
                        out.push(if_goto(negate(cond), alt.clone(), pos));
                        out.extend(self.lower(then_branch));
                        out.push(Stmt::Goto { label: end.clone(), pos });
                        out.push(Stmt::Label { name: alt, pos });
                        out.extend(self.lower(els));
                        out.push(Stmt::Label { name: end, pos });
                    } else {
                        let end = self.fresh_label();
                        out.push(if_goto(negate(cond), end.clone(), pos));
                        out.extend(self.lower(then_branch));
                        out.push(Stmt::Label { name: end, pos });
                    }
                }
                other => out.push(other),
            }
        }
        out
    }

    /// Emits `stmt` with every suspendable call brought into root position.
    fn hoist(&mut self, stmt: Stmt, out: &mut Vec<Stmt>) {
        match stmt {
            Stmt::VarDecl { name, ty, init: Some(init), pos }
                if contains_cps_call(self.typed, &init) =>
            {
                out.push(Stmt::VarDecl { name: name.clone(), ty, init: None, pos });
                self.hoist(
                    Stmt::Assign { target: LValue::Var { name, pos }, value: init, pos },
                    out,
                );
            }
            Stmt::Assign { mut target, mut value, pos } => {
                let target_cps = match &target {
                    LValue::Var { .. } => false,
                    LValue::Deref { ptr, .. } => contains_cps_call(self.typed, ptr),
                    LValue::Index { base, .. } => contains_cps_call(self.typed, base),
                };
                if is_cps_call(self.typed, &value) {
                    self.pin_call_args(&mut value, out);
                    let temp = self.intern(value, Type::Int, out);
                    self.pin_target(&mut target, target_cps, out);
                    out.push(Stmt::Assign { target, value: temp, pos });
                } else {
                    if contains_cps_call(self.typed, &value) || target_cps {
                        self.pin_inner(&mut value, out);
                        self.pin_target(&mut target, target_cps, out);
                    }
                    out.push(Stmt::Assign { target, value, pos });
                }
            }
            Stmt::Expr { mut expr, pos } => {
                self.pin_call_args(&mut expr, out);
                out.push(Stmt::Expr { expr, pos });
            }
            Stmt::If { mut cond, then_branch, else_branch, pos } => {
                self.pin(&mut cond, out);
                out.push(Stmt::If { cond, then_branch, else_branch, pos });
            }
            Stmt::Return { value: Some(mut e), pos } => {
                if is_cps_call(self.typed, &e) {
                    self.pin_call_args(&mut e, out);
                } else {
                    self.pin(&mut e, out);
                }
                out.push(Stmt::Return { value: Some(e), pos });
            }
            other => out.push(other),
        }
    }

    /// Hoists inside the arguments of a call that itself stays in place.
    /// Every argument is pinned, not just the suspendable ones, so argument
    /// effects keep their source order around the suspension point.
    fn pin_call_args(&mut self, call: &mut Expr, out: &mut Vec<Stmt>) {
        if !contains_cps_call(self.typed, call) {
            return;
        }
        if let ExprKind::Call { args, .. } = &mut call.kind {
            for a in args {
                self.pin_inner(a, out);
            }
        }
    }

    /// Rewrites `e` so that it contains no calls at all: every call, pointer
    /// load, and global read moves into a temporary, evaluated in source
    /// order before the statement. No-op unless `e` contains a suspendable
    /// call somewhere.
    fn pin(&mut self, e: &mut Expr, out: &mut Vec<Stmt>) {
        if !contains_cps_call(self.typed, e) {
            return;
        }
        self.pin_inner(e, out);
    }

    /// An assignment evaluates its value first, then the target address, so
    /// when a suspendable call hides in the target's pointer expression both
    /// sides must be captured in that order.
    fn pin_target(&mut self, target: &mut LValue, target_cps: bool, out: &mut Vec<Stmt>) {
        if !target_cps {
            return;
        }
        match target {
            LValue::Var { .. } => {}
            LValue::Deref { ptr, .. } => self.pin_inner(ptr, out),
            LValue::Index { base, .. } => self.pin_inner(base, out),
        }
    }

    fn pin_inner(&mut self, e: &mut Expr, out: &mut Vec<Stmt>) {
        match &mut e.kind {
            ExprKind::Binary { op: BinOp::And | BinOp::Or, .. } => {
                if contains_cps_call(self.typed, e) {
                    let temp = self.lower_bool(e, out);
                    *e = temp;
                } else if self.has_unstable_read(e) {
                    let taken = std::mem::replace(e, Expr::int(0, e.pos));
                    *e = self.intern(taken, Type::Int, out);
                }
            }
            ExprKind::Unary { op: UnOp::Not, operand } => {
                if contains_cps_call(self.typed, operand) {
                    let temp = self.lower_bool(e, out);
                    *e = temp;
                } else {
                    self.pin_inner(operand, out);
                }
            }
            ExprKind::Unary { op: UnOp::Neg, operand } => self.pin_inner(operand, out),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.pin_inner(lhs, out);
                self.pin_inner(rhs, out);
            }
            ExprKind::Call { .. } => {
                if let ExprKind::Call { args, .. } = &mut e.kind {
                    for a in args {
                        self.pin_inner(a, out);
                    }
                }
                let ty = self.expr_type(e);
                let taken = std::mem::replace(e, Expr::int(0, e.pos));
                *e = self.intern(taken, ty, out);
            }
            ExprKind::Deref(inner) => {
                self.pin_inner(inner, out);
                let taken = std::mem::replace(e, Expr::int(0, e.pos));
                *e = self.intern(taken, Type::Int, out);
            }
            ExprKind::Index { base, .. } => {
                self.pin_inner(base, out);
                let taken = std::mem::replace(e, Expr::int(0, e.pos));
                *e = self.intern(taken, Type::Int, out);
            }
            ExprKind::Var(name) => {
                if self.globals.iter().any(|g| g == name) {
                    let ty = self.expr_type(e);
                    let taken = std::mem::replace(e, Expr::int(0, e.pos));
                    *e = self.intern(taken, ty, out);
                }
            }
            ExprKind::AddrOfIndex { base, .. } => self.pin_inner(base, out),
            ExprKind::IntLit(_) | ExprKind::AddrOf(_) | ExprKind::Push { .. } | ExprKind::Hole => {}
        }
    }

    /// Whether evaluating `e` observes mutable state (calls, memory, globals).
    fn has_unstable_read(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Call { .. } | ExprKind::Deref(_) | ExprKind::Index { .. } => true,
            ExprKind::Var(name) => self.globals.iter().any(|g| g == name),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.has_unstable_read(lhs) || self.has_unstable_read(rhs)
            }
            ExprKind::Unary { operand, .. } => self.has_unstable_read(operand),
            ExprKind::AddrOfIndex { base, .. } => self.has_unstable_read(base),
            _ => false,
        }
    }

    /// `t = <e>;` with a fresh `t`, returning the replacement read of `t`.
    fn intern(&mut self, e: Expr, ty: Type, out: &mut Vec<Stmt>) -> Expr {
        let pos = e.pos;
        let name = self.fresh_temp();
        out.push(Stmt::VarDecl { name: name.clone(), ty, init: None, pos });
        out.push(Stmt::Assign { target: LValue::Var { name: name.clone(), pos }, value: e, pos });
        Expr::var(name, pos)
    }

    /// Lowers a short-circuit expression containing suspendable calls into a
    /// temporary holding 0 or 1, using explicit jumps so operands evaluate
    /// exactly when the original would have evaluated them.
    fn lower_bool(&mut self, e: &mut Expr, out: &mut Vec<Stmt>) -> Expr {
        let pos = e.pos;
        let name = self.fresh_temp();
        out.push(Stmt::VarDecl { name: name.clone(), ty: Type::Int, init: None, pos });
        let taken = std::mem::replace(e, Expr::int(0, pos));
        self.lower_bool_into(taken, &name, out);
        Expr::var(name, pos)
    }

    fn lower_bool_into(&mut self, e: Expr, t: &str, out: &mut Vec<Stmt>) {
        let pos = e.pos;
        match e.kind {
            ExprKind::Binary { op: op @ (BinOp::And | BinOp::Or), lhs, rhs } => {
                self.lower_bool_into(*lhs, t, out);
                let end = self.fresh_label();
                let settled = match op {
                    BinOp::And => Expr::new(
                        ExprKind::Binary {
                            op: BinOp::Eq,
                            lhs: Box::new(Expr::var(t, pos)),
                            rhs: Box::new(Expr::int(0, pos)),
                        },
                        pos,
                    ),
                    _ => Expr::new(
                        ExprKind::Binary {
                            op: BinOp::Ne,
                            lhs: Box::new(Expr::var(t, pos)),
                            rhs: Box::new(Expr::int(0, pos)),
                        },
                        pos,
                    ),
                };
                out.push(if_goto(settled, end.clone(), pos));
                self.lower_bool_into(*rhs, t, out);
                out.push(Stmt::Label { name: end, pos });
            }
            ExprKind::Unary { op: UnOp::Not, operand } => {
                self.lower_bool_into(*operand, t, out);
                out.push(Stmt::Assign {
                    target: LValue::Var { name: t.to_string(), pos },
                    value: Expr::new(
                        ExprKind::Binary {
                            op: BinOp::Eq,
                            lhs: Box::new(Expr::var(t, pos)),
                            rhs: Box::new(Expr::int(0, pos)),
                        },
                        pos,
                    ),
                    pos,
                });
            }
            kind => {
                let mut leaf = Expr { id: e.id, kind, pos };
                self.pin(&mut leaf, out);
                out.push(Stmt::Assign {
                    target: LValue::Var { name: t.to_string(), pos },
                    value: Expr::new(
                        ExprKind::Binary {
                            op: BinOp::Ne,
                            lhs: Box::new(leaf),
                            rhs: Box::new(Expr::int(0, pos)),
                        },
                        pos,
                    ),
                    pos,
                });
            }
        }
    }

    fn expr_type(&self, e: &Expr) -> Type {
        self.typed.expr_types.get(&e.id).cloned().unwrap_or(Type::Int)
    }
}

fn if_goto(cond: Expr, label: String, pos: Pos) -> Stmt {
    Stmt::If { cond, then_branch: vec![Stmt::Goto { label, pos }], else_branch: None, pos }
}

/// `!e` with comparisons folded into their opposites.
fn negate(e: Expr) -> Expr {
    let pos = e.pos;
    match e.kind {
        ExprKind::Binary { op, lhs, rhs } => {
            let flipped = match op {
                BinOp::Eq => Some(BinOp::Ne),
                BinOp::Ne => Some(BinOp::Eq),
                BinOp::Lt => Some(BinOp::Ge),
                BinOp::Le => Some(BinOp::Gt),
                BinOp::Gt => Some(BinOp::Le),
                BinOp::Ge => Some(BinOp::Lt),
                _ => None,
            };
            match flipped {
                Some(op) => Expr::new(ExprKind::Binary { op, lhs, rhs }, pos),
                None => not(Expr::new(ExprKind::Binary { op, lhs, rhs }, pos)),
            }
        }
        ExprKind::Unary { op: UnOp::Not, operand } => *operand,
        ExprKind::IntLit(v) => Expr::int(i64::from(v == 0), pos),
        kind => not(Expr { id: e.id, kind, pos }),
    }
}

fn not(e: Expr) -> Expr {
    let pos = e.pos;
    Expr::new(ExprKind::Unary { op: UnOp::Not, operand: Box::new(e) }, pos)
}

/// The next free index for generated labels in this body.
pub(crate) fn next_label_index(body: &[Stmt]) -> u32 {
    next_generated_index(body, "")
}

/// Scans a body for `__cpc_<suffix><n>` names already present, so fresh
/// names from repeated runs never collide.
fn next_generated_index(body: &[Stmt], kind: &str) -> u32 {
    let prefix = format!("{GENERATED_PREFIX}{kind}");
    let mut max: Option<u32> = None;
    scan_names(body, &mut |name: &str| {
        if let Some(rest) = name.strip_prefix(&prefix) {
            if let Ok(n) = rest.parse::<u32>() {
                max = Some(max.map_or(n, |m| m.max(n)));
            }
        }
    });
    max.map_or(0, |m| m + 1)
}

fn scan_names(stmts: &[Stmt], visit: &mut impl FnMut(&str)) {
    for stmt in stmts {
        match stmt {
            Stmt::VarDecl { name, .. } | Stmt::Label { name, .. } => visit(name),
            Stmt::Goto { label, .. } => visit(label),
            Stmt::If { then_branch, else_branch, .. } => {
                scan_names(then_branch, visit);
                if let Some(els) = else_branch {
                    scan_names(els, visit);
                }
            }
            Stmt::While { body, .. } => scan_names(body, visit),
            Stmt::FuncDef(f) => {
                if let Some(body) = &f.body {
                    scan_names(body, visit);
                }
            }
            _ => {}
        }
    }
}
