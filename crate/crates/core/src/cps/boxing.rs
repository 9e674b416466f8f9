//! Moves address-taken locals of coroutine functions into a heap record.
//!
//! A coroutine's stack frame dissolves into continuation frames, so a local
//! whose address escapes must live somewhere stable. Each affected function
//! allocates one record up front (`int *__cpc_env = alloc(n);`), copies the
//! affected parameters in, and every read, write, and address-of against such
//! a variable becomes an access to its record cell.

use std::collections::HashMap;

use crate::ast::{Expr, ExprKind, Function, LValue, Pos, Program, Stmt, Type};
use crate::error::LangError;
use crate::typeck::TypedProgram;

const ENV_NAME: &str = "__cpc_env";

pub fn box_captured_locals(typed: &TypedProgram) -> Result<Program, LangError> {
    let mut program = typed.program.clone();
    for f in program.functions_mut() {
        if f.annotation.is_coroutine() && f.is_defined() {
            box_function(f);
        }
    }
    program.assign_ids();
    Ok(program)
}

fn box_function(f: &mut Function) {
    let body = f.body.as_mut().expect("defined function");

    let mut local_order: Vec<String> = Vec::new();
    for p in &f.params {
        if let Some(name) = &p.name {
            local_order.push(name.clone());
        }
    }
    collect_decls(body, &mut local_order);

    let mut taken: Vec<String> = Vec::new();
    for stmt in body.iter() {
        collect_taken_stmt(stmt, &local_order, &mut taken);
    }
    if taken.is_empty() {
        return;
    }

    let slots: HashMap<String, i64> = local_order
        .iter()
        .filter(|n| taken.contains(n))
        .enumerate()
        .map(|(i, n)| (n.clone(), i as i64))
        .collect();

    for stmt in body.iter_mut() {
        rewrite_stmt(stmt, &slots);
    }
    remove_boxed_decls(body, &slots);

    let pos = f.pos;
    let mut prologue = vec![Stmt::VarDecl {
        name: ENV_NAME.to_string(),
        ty: Type::IntPtr,
        init: Some(Expr::call(
            Expr::var("alloc", pos),
            vec![Expr::int(slots.len() as i64, pos)],
            pos,
        )),
        pos,
    }];
    for p in &f.params {
        let Some(name) = &p.name else { continue };
        if let Some(&slot) = slots.get(name) {
            prologue.push(Stmt::Assign {
                target: LValue::Index { base: Expr::var(ENV_NAME, p.pos), offset: slot, pos: p.pos },
                value: Expr::var(name.clone(), p.pos),
                pos: p.pos,
            });
        }
    }
    body.splice(0..0, prologue);
}

fn collect_decls(stmts: &[Stmt], out: &mut Vec<String>) {
    for stmt in stmts {
        match stmt {
            Stmt::VarDecl { name, .. } => out.push(name.clone()),
            Stmt::If { then_branch, else_branch, .. } => {
                collect_decls(then_branch, out);
                if let Some(els) = else_branch {
                    collect_decls(els, out);
                }
            }
            Stmt::While { body, .. } => collect_decls(body, out),
            _ => {}
        }
    }
}

fn collect_taken_stmt(stmt: &Stmt, locals: &[String], out: &mut Vec<String>) {
    let mut on_expr = |e: &Expr| collect_taken_expr(e, locals, out);
    match stmt {
        Stmt::VarDecl { init, .. } => {
            if let Some(e) = init {
                on_expr(e);
            }
        }
        Stmt::Assign { target, value, .. } => {
            match target {
                LValue::Deref { ptr, .. } => on_expr(ptr),
                LValue::Index { base, .. } => on_expr(base),
                LValue::Var { .. } => {}
            }
            on_expr(value);
        }
        Stmt::Expr { expr, .. } => on_expr(expr),
        Stmt::If { cond, then_branch, else_branch, .. } => {
            on_expr(cond);
            for s in then_branch {
                collect_taken_stmt(s, locals, out);
            }
            if let Some(els) = else_branch {
                for s in els {
                    collect_taken_stmt(s, locals, out);
                }
            }
        }
        Stmt::While { cond, body, .. } => {
            on_expr(cond);
            for s in body {
                collect_taken_stmt(s, locals, out);
            }
        }
        Stmt::Return { value, .. } => {
            if let Some(e) = value {
                on_expr(e);
            }
        }
        Stmt::Invoke { cont, value, .. } => {
            on_expr(cont);
            if let Some(e) = value {
                on_expr(e);
            }
        }
        Stmt::Label { .. } | Stmt::Goto { .. } | Stmt::FuncDef(_) => {}
    }
}

fn collect_taken_expr(e: &Expr, locals: &[String], out: &mut Vec<String>) {
    match &e.kind {
        ExprKind::AddrOf(name) => {
            if locals.iter().any(|l| l == name) && !out.contains(name) {
                out.push(name.clone());
            }
        }
        ExprKind::Call { callee, args } => {
            collect_taken_expr(callee, locals, out);
            for a in args {
                collect_taken_expr(a, locals, out);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            collect_taken_expr(lhs, locals, out);
            collect_taken_expr(rhs, locals, out);
        }
        ExprKind::Unary { operand, .. } => collect_taken_expr(operand, locals, out),
        ExprKind::Deref(inner) => collect_taken_expr(inner, locals, out),
        ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
            collect_taken_expr(base, locals, out)
        }
        ExprKind::Push { args, cont, .. } => {
            for a in args {
                collect_taken_expr(a, locals, out);
            }
            collect_taken_expr(cont, locals, out);
        }
        _ => {}
    }
}

fn env_cell(slot: i64, pos: Pos) -> Expr {
    Expr::new(
        ExprKind::Index { base: Box::new(Expr::var(ENV_NAME, pos)), offset: slot },
        pos,
    )
}

fn rewrite_stmt(stmt: &mut Stmt, slots: &HashMap<String, i64>) {
    match stmt {
        Stmt::VarDecl { init, .. } => {
            if let Some(e) = init {
                rewrite_expr(e, slots);
            }
        }
        Stmt::Assign { target, value, .. } => {
            rewrite_expr(value, slots);
            match target {
                LValue::Var { name, pos } => {
                    if let Some(&slot) = slots.get(name.as_str()) {
                        *target = LValue::Index {
                            base: Expr::var(ENV_NAME, *pos),
                            offset: slot,
                            pos: *pos,
                        };
                    }
                }
                LValue::Deref { ptr, .. } => rewrite_expr(ptr, slots),
                LValue::Index { base, .. } => rewrite_expr(base, slots),
            }
        }
        Stmt::Expr { expr, .. } => rewrite_expr(expr, slots),
        Stmt::If { cond, then_branch, else_branch, .. } => {
            rewrite_expr(cond, slots);
            for s in then_branch {
                rewrite_stmt(s, slots);
            }
            if let Some(els) = else_branch {
                for s in els {
                    rewrite_stmt(s, slots);
                }
            }
        }
        Stmt::While { cond, body, .. } => {
            rewrite_expr(cond, slots);
            for s in body {
                rewrite_stmt(s, slots);
            }
        }
        Stmt::Return { value, .. } => {
            if let Some(e) = value {
                rewrite_expr(e, slots);
            }
        }
        Stmt::Invoke { cont, value, .. } => {
            rewrite_expr(cont, slots);
            if let Some(e) = value {
                rewrite_expr(e, slots);
            }
        }
        Stmt::Label { .. } | Stmt::Goto { .. } | Stmt::FuncDef(_) => {}
    }
}

fn rewrite_expr(e: &mut Expr, slots: &HashMap<String, i64>) {
    match &mut e.kind {
        ExprKind::Var(name) => {
            if let Some(&slot) = slots.get(name.as_str()) {
                *e = env_cell(slot, e.pos);
            }
        }
        ExprKind::AddrOf(name) => {
            if let Some(&slot) = slots.get(name.as_str()) {
                e.kind = ExprKind::AddrOfIndex {
                    base: Box::new(Expr::var(ENV_NAME, e.pos)),
                    offset: slot,
                };
            }
        }
        ExprKind::Call { callee, args } => {
            rewrite_expr(callee, slots);
            for a in args {
                rewrite_expr(a, slots);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            rewrite_expr(lhs, slots);
            rewrite_expr(rhs, slots);
        }
        ExprKind::Unary { operand, .. } => rewrite_expr(operand, slots),
        ExprKind::Deref(inner) => rewrite_expr(inner, slots),
        ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
            rewrite_expr(base, slots)
        }
        ExprKind::Push { args, cont, .. } => {
            for a in args {
                rewrite_expr(a, slots);
            }
            rewrite_expr(cont, slots);
        }
        ExprKind::IntLit(_) | ExprKind::Hole => {}
    }
}

/// Declarations of boxed locals disappear; an initializer becomes a store
/// into the record cell at the declaration's position.
fn remove_boxed_decls(stmts: &mut Vec<Stmt>, slots: &HashMap<String, i64>) {
    let mut i = 0;
    while i < stmts.len() {
        let replace = match &stmts[i] {
            Stmt::VarDecl { name, init, pos, .. } if slots.contains_key(name.as_str()) => {
                Some((slots[name.as_str()], init.clone(), *pos))
            }
            _ => None,
        };
        if let Some((slot, init, pos)) = replace {
            match init {
                Some(value) => {
                    stmts[i] = Stmt::Assign {
                        target: LValue::Index { base: Expr::var(ENV_NAME, pos), offset: slot, pos },
                        value,
                        pos,
                    };
                    i += 1;
                }
                None => {
                    stmts.remove(i);
                }
            }
        } else {
            match &mut stmts[i] {
                Stmt::If { then_branch, else_branch, .. } => {
                    remove_boxed_decls(then_branch, slots);
                    if let Some(els) = else_branch {
                        remove_boxed_decls(els, slots);
                    }
                }
                Stmt::While { body, .. } => remove_boxed_decls(body, slots),
                _ => {}
            }
            i += 1;
        }
    }
}
