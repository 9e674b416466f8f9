//! Floats the nested block functions to the top level, threading the
//! variables they touch through as parameters.
//!
//! Each block's parameter list is computed as a fixpoint: the variables it
//! reads or writes directly, plus every parameter of each block it calls,
//! minus whatever it declares itself. Parameters keep the declaration order
//! of the parent function, so the lists are deterministic. A lifted block
//! named `L` inside `f` becomes `__cpc_f_L` (the synthetic `__cpc_<n>`
//! labels become `__cpc_f_<n>`), with a numeric suffix if that name is
//! somehow taken.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::ast::{
    Expr, ExprKind, Function, Item, LValue, Param, Program, Stmt, Type, GENERATED_PREFIX,
};
use crate::error::LangError;
use crate::typeck::TypedProgram;

pub fn lift(typed: &TypedProgram) -> Result<Program, LangError> {
    let mut taken: HashSet<String> = typed
        .program
        .functions()
        .map(|f| f.name.clone())
        .chain(typed.program.globals().map(|g| g.name.clone()))
        .chain(crate::builtins::builtin_table().iter().map(|b| b.name.to_string()))
        .collect();

    let mut items = Vec::with_capacity(typed.program.items.len());
    for item in &typed.program.items {
        match item {
            Item::Func(f) if has_nested(f) => {
                let (blocks, parent) = lift_function(f.clone(), &mut taken);
                items.extend(blocks.into_iter().map(Item::Func));
                items.push(Item::Func(parent));
            }
            other => items.push(other.clone()),
        }
    }

    let mut program = Program { items };
    program.assign_ids();
    Ok(program)
}

fn has_nested(f: &Function) -> bool {
    f.body.as_deref().is_some_and(|b| b.iter().any(|s| matches!(s, Stmt::FuncDef(_))))
}

fn lift_function(mut parent: Function, taken: &mut HashSet<String>) -> (Vec<Function>, Function) {
    let body = parent.body.take().expect("defined function");
    let mut blocks: Vec<Function> = Vec::new();
    let mut rest: Vec<Stmt> = Vec::new();
    for stmt in body {
        match stmt {
            Stmt::FuncDef(b) => blocks.push(b),
            other => rest.push(other),
        }
    }

    // Declaration-ordered universe of the function's variables.
    let mut universe: Vec<(String, Type)> = Vec::new();
    for p in &parent.params {
        if let Some(name) = &p.name {
            universe.push((name.clone(), p.ty.clone()));
        }
    }
    collect_decl_types(&rest, &mut universe);
    for b in &blocks {
        collect_decl_types(b.body.as_deref().unwrap_or(&[]), &mut universe);
    }
    let index_of: HashMap<&str, usize> =
        universe.iter().enumerate().map(|(i, (n, _))| (n.as_str(), i)).collect();
    let block_names: HashSet<String> = blocks.iter().map(|b| b.name.clone()).collect();

    // lifted(B) = (refs(B) ∪ ⋃ lifted(callees)) \ bound(B), to fixpoint.
    let mut lifted: HashMap<String, BTreeSet<usize>> = HashMap::new();
    let mut refs: HashMap<String, BTreeSet<usize>> = HashMap::new();
    let mut bound: HashMap<String, HashSet<String>> = HashMap::new();
    let mut calls: HashMap<String, HashSet<String>> = HashMap::new();
    for b in &blocks {
        let body = b.body.as_deref().unwrap_or(&[]);
        let mut r = BTreeSet::new();
        collect_refs(body, &index_of, &block_names, &mut r);
        refs.insert(b.name.clone(), r);
        let mut d = Vec::new();
        collect_decl_names(body, &mut d);
        bound.insert(b.name.clone(), d.into_iter().collect());
        let mut c = HashSet::new();
        collect_calls(body, &block_names, &mut c);
        calls.insert(b.name.clone(), c);
        lifted.insert(b.name.clone(), BTreeSet::new());
    }
    loop {
        let mut changed = false;
        for b in &blocks {
            let mut want = refs[&b.name].clone();
            for callee in &calls[&b.name] {
                want.extend(lifted[callee].iter().copied());
            }
            let want: BTreeSet<usize> = want
                .into_iter()
                .filter(|&i| !bound[&b.name].contains(&universe[i].0))
                .collect();
            if want != lifted[&b.name] {
                lifted.insert(b.name.clone(), want);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Top-level names for the blocks.
    let mut renames: HashMap<String, String> = HashMap::new();
    for b in &blocks {
        let suffix = b.name.strip_prefix(GENERATED_PREFIX).unwrap_or(&b.name);
        let base = format!("{GENERATED_PREFIX}{}_{suffix}", parent.name);
        let mut name = base.clone();
        let mut n = 2;
        while taken.contains(&name) {
            name = format!("{base}_{n}");
            n += 1;
        }
        taken.insert(name.clone());
        renames.insert(b.name.clone(), name);
    }

    let lifted_args: HashMap<String, Vec<(String, Type)>> = blocks
        .iter()
        .map(|b| {
            let args: Vec<(String, Type)> =
                lifted[&b.name].iter().map(|&i| universe[i].clone()).collect();
            (b.name.clone(), args)
        })
        .collect();

    let mut finished: Vec<Function> = Vec::new();
    for mut b in blocks {
        let body = b.body.as_mut().expect("block body");
        rewrite_calls(body, &renames, &lifted_args);
        b.params = lifted_args[&b.name]
            .iter()
            .map(|(n, t)| Param { name: Some(n.clone()), ty: t.clone(), pos: b.pos })
            .collect();
        b.name = renames[&b.name].clone();
        finished.push(b);
    }
    rewrite_calls(&mut rest, &renames, &lifted_args);
    parent.body = Some(rest);
    (finished, parent)
}

fn collect_decl_types(stmts: &[Stmt], out: &mut Vec<(String, Type)>) {
    for stmt in stmts {
        match stmt {
            Stmt::VarDecl { name, ty, .. } => out.push((name.clone(), ty.clone())),
            Stmt::If { then_branch, else_branch, .. } => {
                collect_decl_types(then_branch, out);
                if let Some(els) = else_branch {
                    collect_decl_types(els, out);
                }
            }
            Stmt::While { body, .. } => collect_decl_types(body, out),
            _ => {}
        }
    }
}

fn collect_decl_names(stmts: &[Stmt], out: &mut Vec<String>) {
    let mut pairs = Vec::new();
    collect_decl_types(stmts, &mut pairs);
    out.extend(pairs.into_iter().map(|(n, _)| n));
}

fn collect_refs(
    stmts: &[Stmt],
    index_of: &HashMap<&str, usize>,
    block_names: &HashSet<String>,
    out: &mut BTreeSet<usize>,
) {
    for stmt in stmts {
        match stmt {
            Stmt::VarDecl { init, .. } => {
                if let Some(e) = init {
                    expr_refs(e, index_of, block_names, out);
                }
            }
            Stmt::Assign { target, value, .. } => {
                match target {
                    LValue::Var { name, .. } => {
                        if let Some(&i) = index_of.get(name.as_str()) {
                            out.insert(i);
                        }
                    }
                    LValue::Deref { ptr, .. } => expr_refs(ptr, index_of, block_names, out),
                    LValue::Index { base, .. } => expr_refs(base, index_of, block_names, out),
                }
                expr_refs(value, index_of, block_names, out);
            }
            Stmt::Expr { expr, .. } => expr_refs(expr, index_of, block_names, out),
            Stmt::If { cond, then_branch, else_branch, .. } => {
                expr_refs(cond, index_of, block_names, out);
                collect_refs(then_branch, index_of, block_names, out);
                if let Some(els) = else_branch {
                    collect_refs(els, index_of, block_names, out);
                }
            }
            Stmt::While { cond, body, .. } => {
                expr_refs(cond, index_of, block_names, out);
                collect_refs(body, index_of, block_names, out);
            }
            Stmt::Return { value, .. } => {
                if let Some(e) = value {
                    expr_refs(e, index_of, block_names, out);
                }
            }
            Stmt::Invoke { cont, value, .. } => {
                expr_refs(cont, index_of, block_names, out);
                if let Some(e) = value {
                    expr_refs(e, index_of, block_names, out);
                }
            }
            Stmt::Label { .. } | Stmt::Goto { .. } | Stmt::FuncDef(_) => {}
        }
    }
}

fn expr_refs(
    e: &Expr,
    index_of: &HashMap<&str, usize>,
    block_names: &HashSet<String>,
    out: &mut BTreeSet<usize>,
) {
    match &e.kind {
        ExprKind::Var(n) | ExprKind::AddrOf(n) => {
            if let Some(&i) = index_of.get(n.as_str()) {
                out.insert(i);
            }
        }
        ExprKind::Call { callee, args } => {
            // A direct call to a sibling block is an edge, not a variable use.
            let sibling =
                matches!(&callee.kind, ExprKind::Var(n) if block_names.contains(n.as_str()));
            if !sibling {
                expr_refs(callee, index_of, block_names, out);
            }
            for a in args {
                expr_refs(a, index_of, block_names, out);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            expr_refs(lhs, index_of, block_names, out);
            expr_refs(rhs, index_of, block_names, out);
        }
        ExprKind::Unary { operand, .. } => expr_refs(operand, index_of, block_names, out),
        ExprKind::Deref(inner) => expr_refs(inner, index_of, block_names, out),
        ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
            expr_refs(base, index_of, block_names, out)
        }
        ExprKind::Push { args, cont, .. } => {
            for a in args {
                expr_refs(a, index_of, block_names, out);
            }
            expr_refs(cont, index_of, block_names, out);
        }
        ExprKind::IntLit(_) | ExprKind::Hole => {}
    }
}

fn collect_calls(stmts: &[Stmt], block_names: &HashSet<String>, out: &mut HashSet<String>) {
    for stmt in stmts {
        match stmt {
            Stmt::VarDecl { init: Some(e), .. } => expr_calls(e, block_names, out),
            Stmt::Assign { value, .. } => expr_calls(value, block_names, out),
            Stmt::Expr { expr, .. } => expr_calls(expr, block_names, out),
            Stmt::If { cond, then_branch, else_branch, .. } => {
                expr_calls(cond, block_names, out);
                collect_calls(then_branch, block_names, out);
                if let Some(els) = else_branch {
                    collect_calls(els, block_names, out);
                }
            }
            Stmt::While { cond, body, .. } => {
                expr_calls(cond, block_names, out);
                collect_calls(body, block_names, out);
            }
            Stmt::Return { value: Some(e), .. } => expr_calls(e, block_names, out),
            _ => {}
        }
    }
}

fn expr_calls(e: &Expr, block_names: &HashSet<String>, out: &mut HashSet<String>) {
    if let ExprKind::Call { callee, args } = &e.kind {
        if let ExprKind::Var(n) = &callee.kind {
            if block_names.contains(n.as_str()) {
                out.insert(n.clone());
            }
        }
        for a in args {
            expr_calls(a, block_names, out);
        }
    } else {
        match &e.kind {
            ExprKind::Binary { lhs, rhs, .. } => {
                expr_calls(lhs, block_names, out);
                expr_calls(rhs, block_names, out);
            }
            ExprKind::Unary { operand, .. } => expr_calls(operand, block_names, out),
            ExprKind::Deref(inner) => expr_calls(inner, block_names, out),
            ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
                expr_calls(base, block_names, out)
            }
            _ => {}
        }
    }
}

/// Rewrites `L()` into `__cpc_f_L(v1, v2, ...)` everywhere in the parent
/// and sibling bodies.
fn rewrite_calls(
    stmts: &mut [Stmt],
    renames: &HashMap<String, String>,
    lifted_args: &HashMap<String, Vec<(String, Type)>>,
) {
    for stmt in stmts {
        match stmt {
            Stmt::VarDecl { init: Some(e), .. } => rewrite_call_expr(e, renames, lifted_args),
            Stmt::Assign { target, value, .. } => {
                if let LValue::Deref { ptr, .. } = target {
                    rewrite_call_expr(ptr, renames, lifted_args);
                }
                if let LValue::Index { base, .. } = target {
                    rewrite_call_expr(base, renames, lifted_args);
                }
                rewrite_call_expr(value, renames, lifted_args);
            }
            Stmt::Expr { expr, .. } => rewrite_call_expr(expr, renames, lifted_args),
            Stmt::If { cond, then_branch, else_branch, .. } => {
                rewrite_call_expr(cond, renames, lifted_args);
                rewrite_calls(then_branch, renames, lifted_args);
                if let Some(els) = else_branch {
                    rewrite_calls(els, renames, lifted_args);
                }
            }
            Stmt::While { cond, body, .. } => {
                rewrite_call_expr(cond, renames, lifted_args);
                rewrite_calls(body, renames, lifted_args);
            }
            Stmt::Return { value: Some(e), .. } => rewrite_call_expr(e, renames, lifted_args),
            _ => {}
        }
    }
}

fn rewrite_call_expr(
    e: &mut Expr,
    renames: &HashMap<String, String>,
    lifted_args: &HashMap<String, Vec<(String, Type)>>,
) {
    if let ExprKind::Call { callee, args } = &mut e.kind {
        let target = match &callee.kind {
            ExprKind::Var(n) if renames.contains_key(n.as_str()) => Some(n.clone()),
            _ => None,
        };
        if let Some(label) = target {
            let pos = callee.pos;
            callee.kind = ExprKind::Var(renames[&label].clone());
            debug_assert!(args.is_empty(), "block calls carry no arguments before lifting");
            *args = lifted_args[&label]
                .iter()
                .map(|(n, _)| Expr::var(n.clone(), pos))
                .collect();
            return;
        }
        for a in args {
            rewrite_call_expr(a, renames, lifted_args);
        }
    } else {
        match &mut e.kind {
            ExprKind::Binary { lhs, rhs, .. } => {
                rewrite_call_expr(lhs, renames, lifted_args);
                rewrite_call_expr(rhs, renames, lifted_args);
            }
            ExprKind::Unary { operand, .. } => rewrite_call_expr(operand, renames, lifted_args),
            ExprKind::Deref(inner) => rewrite_call_expr(inner, renames, lifted_args),
            ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
                rewrite_call_expr(base, renames, lifted_args)
            }
            _ => {}
        }
    }
}
