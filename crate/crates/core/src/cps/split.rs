//! Splits flat coroutine bodies into a chain of nested functions, one per
//! label. Control transfers become tail calls.
//!
//! Every label that a goto targets opens a block, and a synthetic label is
//! inserted after each suspendable call that is not already followed by a
//! transfer — the suspendable call must be the last real work its block
//! does. The statements before the first label stay in the parent; each
//! later block becomes a nested function (no parameters yet; the lifting
//! pass threads variables through). `goto L;` turns into `L(); return;`
//! (or `return L();` when the function returns a value), and a block that
//! falls through to the next label ends with the same tail call to it.
//!
//! Local declarations move up into the parent so that a variable shared
//! across blocks has a single owner that every nested function can see.

use std::collections::HashSet;

use crate::ast::{Expr, ExprKind, Function, LValue, Pos, Program, Stmt, Type, GENERATED_PREFIX};
use crate::error::LangError;
use crate::typeck::TypedProgram;

use super::{cps_call_stmt, is_cps_call};

pub fn split(typed: &TypedProgram) -> Result<Program, LangError> {
    let mut program = typed.program.clone();
    let taken: HashSet<String> = program
        .functions()
        .map(|f| f.name.clone())
        .chain(program.globals().map(|g| g.name.clone()))
        .collect();
    for f in program.functions_mut() {
        if f.annotation.is_coroutine() && f.is_defined() {
            split_function(f, typed, &taken);
        }
    }
    program.assign_ids();
    Ok(program)
}

fn split_function(f: &mut Function, typed: &TypedProgram, global_names: &HashSet<String>) {
    let mut body = f.body.take().expect("defined function");

    let mut targets = HashSet::new();
    collect_goto_targets(&body, &mut targets);
    body.retain(|s| !matches!(s, Stmt::Label { name, .. } if !targets.contains(name)));
    drop_unreachable(&mut body);

    let mut next_label = super::normalize::next_label_index(&body);
    insert_suspension_labels(&mut body, typed, &mut next_label);

    let decls = hoist_decls(&mut body);

    let mut reserved: HashSet<String> = global_names.clone();
    reserved.extend(f.params.iter().filter_map(|p| p.name.clone()));
    reserved.extend(decls.iter().map(|(n, _, _)| n.clone()));
    rename_colliding_labels(&mut body, &reserved, &mut next_label);

    let blocks = partition(body);
    let labels: Vec<String> = blocks.named.iter().map(|b| b.label.clone()).collect();

    let mut out: Vec<Stmt> = Vec::new();
    for (i, block) in blocks.named.into_iter().enumerate() {
        let next = labels.get(i + 1).map(|s| s.as_str());
        out.push(Stmt::FuncDef(Function {
            name: block.label,
            annotation: f.annotation,
            ret: f.ret.clone(),
            params: Vec::new(),
            body: Some(rewrite_transfers(block.stmts, &f.ret, next)),
            pos: block.pos,
        }));
    }
    for (name, ty, pos) in decls {
        out.push(Stmt::VarDecl { name, ty, init: None, pos });
    }
    out.extend(rewrite_transfers(blocks.entry, &f.ret, labels.first().map(|s| s.as_str())));
    f.body = Some(out);
}

struct Blocks {
    entry: Vec<Stmt>,
    named: Vec<Block>,
}

struct Block {
    label: String,
    pos: Pos,
    stmts: Vec<Stmt>,
}

fn partition(body: Vec<Stmt>) -> Blocks {
    let mut entry = Vec::new();
    let mut named: Vec<Block> = Vec::new();
    for stmt in body {
        match stmt {
            Stmt::Label { name, pos } => named.push(Block { label: name, pos, stmts: Vec::new() }),
            other => match named.last_mut() {
                Some(block) => block.stmts.push(other),
                None => entry.push(other),
            },
        }
    }
    Blocks { entry, named }
}

/// Gotos become tail calls; a block that does not end in a return receives
/// a tail call to the block that follows it in source order.
fn rewrite_transfers(stmts: Vec<Stmt>, ret: &Type, next: Option<&str>) -> Vec<Stmt> {
    let mut out = rewrite_gotos(stmts, ret);
    if !matches!(out.last(), Some(Stmt::Return { .. })) {
        let pos = out.last().map_or_else(Pos::default, |s| s.pos());
        match next {
            Some(label) => out.extend(tail_call(label, ret, pos)),
            None => out.push(Stmt::Return {
                value: (!ret.is_void()).then(|| Expr::int(0, pos)),
                pos,
            }),
        }
    }
    out
}

fn rewrite_gotos(stmts: Vec<Stmt>, ret: &Type) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for stmt in stmts {
        match stmt {
            Stmt::Goto { label, pos } => out.extend(tail_call(&label, ret, pos)),
            Stmt::If { cond, then_branch, else_branch, pos } => out.push(Stmt::If {
                cond,
                then_branch: rewrite_gotos(then_branch, ret),
                else_branch: else_branch.map(|els| rewrite_gotos(els, ret)),
                pos,
            }),
            other => out.push(other),
        }
    }
    out
}

fn tail_call(label: &str, ret: &Type, pos: Pos) -> Vec<Stmt> {
    let call = Expr::call(Expr::var(label, pos), Vec::new(), pos);
    if ret.is_void() {
        vec![Stmt::Expr { expr: call, pos }, Stmt::Return { value: None, pos }]
    } else {
        vec![Stmt::Return { value: Some(call), pos }]
    }
}

fn collect_goto_targets(stmts: &[Stmt], out: &mut HashSet<String>) {
    for stmt in stmts {
        match stmt {
            Stmt::Goto { label, .. } => {
                out.insert(label.clone());
            }
            Stmt::If { then_branch, else_branch, .. } => {
                collect_goto_targets(then_branch, out);
                if let Some(els) = else_branch {
                    collect_goto_targets(els, out);
                }
            }
            Stmt::While { body, .. } => collect_goto_targets(body, out),
            _ => {}
        }
    }
}

/// Statements after an unconditional transfer and before the next label can
/// never run.
fn drop_unreachable(body: &mut Vec<Stmt>) {
    let mut reachable = true;
    body.retain(|stmt| {
        if matches!(stmt, Stmt::Label { .. }) {
            reachable = true;
            return true;
        }
        if !reachable {
            return false;
        }
        if matches!(stmt, Stmt::Goto { .. } | Stmt::Return { .. }) {
            reachable = false;
        }
        true
    });
}

/// After a suspendable call the function must transfer control, because its
/// continuation resumes in a separate function. When the next statement is
/// not already a transfer or a permissible tail, a label is planted so the
/// remainder becomes its own block.
fn insert_suspension_labels(body: &mut Vec<Stmt>, typed: &TypedProgram, next_label: &mut u32) {
    let mut i = 0;
    while i < body.len() {
        if cps_call_stmt(typed, &body[i]) && !valid_successor(typed, &body[i], body.get(i + 1)) {
            let pos = body[i].pos();
            let name = format!("{GENERATED_PREFIX}{next_label}");
            *next_label += 1;
            body.insert(i + 1, Stmt::Label { name, pos });
            i += 1;
        }
        i += 1;
    }
}

/// Whether the statement after a suspendable call completes a convertible
/// tail: a transfer, a block end, or a return the conversion pass can feed
/// from the call's continuation.
fn valid_successor(typed: &TypedProgram, call_stmt: &Stmt, next: Option<&Stmt>) -> bool {
    let assigned = match call_stmt {
        Stmt::Assign { target: LValue::Var { name, .. }, .. } => Some(name.as_str()),
        _ => None,
    };
    match next {
        Some(Stmt::Goto { .. }) | Some(Stmt::Label { .. }) => true,
        Some(Stmt::Return { value: None, .. }) => true,
        Some(Stmt::Return { value: Some(e), .. }) => {
            if is_cps_call(typed, e) {
                // The returned call's frame is built before the suspending
                // call runs, so the temporary may only feed it as a whole
                // argument slot (at most one), never inside an expression.
                let ExprKind::Call { args, .. } = &e.kind else { return false };
                let Some(t) = assigned else { return true };
                let direct =
                    args.iter().filter(|a| matches!(&a.kind, ExprKind::Var(n) if n == t)).count();
                let nested = args
                    .iter()
                    .filter(|a| !matches!(&a.kind, ExprKind::Var(n) if n == t))
                    .any(|a| mentions_var(a, t));
                return direct <= 1 && !nested;
            }
            matches!((&e.kind, assigned), (ExprKind::Var(name), Some(t)) if name == t)
        }
        _ => false,
    }
}

pub(crate) fn mentions_var(e: &Expr, name: &str) -> bool {
    match &e.kind {
        ExprKind::Var(n) => n == name,
        ExprKind::Call { callee, args } => {
            mentions_var(callee, name) || args.iter().any(|a| mentions_var(a, name))
        }
        ExprKind::Binary { lhs, rhs, .. } => mentions_var(lhs, name) || mentions_var(rhs, name),
        ExprKind::Unary { operand, .. } => mentions_var(operand, name),
        ExprKind::Deref(inner) => mentions_var(inner, name),
        ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
            mentions_var(base, name)
        }
        ExprKind::Push { args, cont, .. } => {
            args.iter().any(|a| mentions_var(a, name)) || mentions_var(cont, name)
        }
        _ => false,
    }
}

/// Locals move to the parent block so every nested function sees one shared
/// variable; an initializer stays behind as a plain assignment.
fn hoist_decls(body: &mut Vec<Stmt>) -> Vec<(String, Type, Pos)> {
    let mut decls = Vec::new();
    let mut i = 0;
    while i < body.len() {
        if matches!(&body[i], Stmt::VarDecl { .. }) {
            let Stmt::VarDecl { name, ty, init, pos } = body.remove(i) else { unreachable!() };
            decls.push((name.clone(), ty, pos));
            if let Some(value) = init {
                body.insert(i, Stmt::Assign { target: LValue::Var { name, pos }, value, pos });
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    decls
}

/// A block turns into a nested function named after its label, so a label
/// sharing a name with any visible variable or function must be renamed.
fn rename_colliding_labels(body: &mut [Stmt], reserved: &HashSet<String>, next_label: &mut u32) {
    let mut renames: Vec<(String, String)> = Vec::new();
    for stmt in body.iter_mut() {
        if let Stmt::Label { name, .. } = stmt {
            if reserved.contains(name) {
                let fresh = format!("{GENERATED_PREFIX}{next_label}");
                *next_label += 1;
                renames.push((name.clone(), fresh.clone()));
                *name = fresh;
            }
        }
    }
    if !renames.is_empty() {
        rename_gotos(body, &renames);
    }
}

fn rename_gotos(stmts: &mut [Stmt], renames: &[(String, String)]) {
    for stmt in stmts {
        match stmt {
            Stmt::Goto { label, .. } => {
                if let Some((_, to)) = renames.iter().find(|(from, _)| from == label) {
                    *label = to.clone();
                }
            }
            Stmt::If { then_branch, else_branch, .. } => {
                rename_gotos(then_branch, renames);
                if let Some(els) = else_branch {
                    rename_gotos(els, renames);
                }
            }
            Stmt::While { body, .. } => rename_gotos(body, renames),
            _ => {}
        }
    }
}
