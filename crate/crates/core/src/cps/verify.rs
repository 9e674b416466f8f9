//! Checks that a split program is ready for conversion: every suspendable
//! call sits at the end of its block, and every block ends in one of the
//! three convertible shapes.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ast::{Expr, ExprKind, Function, LValue, Pos, Stmt};
use crate::typeck::TypedProgram;

use super::{cps_call_stmt, is_cps_call};

/// How a block hands over control when it finishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailShape {
    /// Ends in a single suspendable call carrying the continuation on.
    TailCallCps,
    /// A suspendable call whose continuation is extended with the frame of
    /// the tail call that follows it.
    ExternCpsThenTailCall,
    /// Returns without suspending; the continuation gets invoked.
    PlainReturn,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub function: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct CpsFormReport {
    /// Final-path shape of every coroutine function, by name.
    pub shapes: BTreeMap<String, TailShape>,
    pub violations: Vec<Violation>,
}

impl CpsFormReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Classifies every coroutine function (including nested block functions)
/// of a split program and reports anything the conversion pass could not
/// handle.
pub fn verify_cps_form(typed: &TypedProgram) -> CpsFormReport {
    let mut report = CpsFormReport::default();
    for f in typed.program.functions() {
        if !f.is_defined() {
            continue;
        }
        if f.annotation.is_coroutine() {
            verify_function(typed, f, &mut report);
        } else if let Some((callee, pos)) =
            super::convert::first_cps_call(typed, f.body.as_deref().unwrap_or(&[]))
        {
            violation(
                &mut report,
                &f.name,
                pos,
                format!("function that cannot suspend calls `{callee}`"),
            );
        }
    }
    report
}

fn verify_function(typed: &TypedProgram, f: &Function, report: &mut CpsFormReport) {
    let body = f.body.as_deref().unwrap_or(&[]);
    let mut main_path: Vec<&Stmt> = Vec::new();
    for stmt in body {
        if let Stmt::FuncDef(nested) = stmt {
            verify_function(typed, nested, report);
        } else {
            main_path.push(stmt);
        }
    }
    verify_stmts(typed, &f.name, &main_path, report);

    match final_shape(typed, &main_path) {
        Some(shape) => {
            report.shapes.insert(f.name.clone(), shape);
        }
        None => violation(
            report,
            &f.name,
            main_path.last().map_or_else(Pos::default, |s| s.pos()),
            "block does not end in a return".to_string(),
        ),
    }
}

fn verify_stmts(typed: &TypedProgram, name: &str, stmts: &[&Stmt], report: &mut CpsFormReport) {
    for (i, stmt) in stmts.iter().enumerate() {
        match stmt {
            Stmt::Label { pos, .. } | Stmt::Goto { pos, .. } => violation(
                report,
                name,
                *pos,
                "control transfer survived splitting".to_string(),
            ),
            Stmt::While { pos, .. } => violation(
                report,
                name,
                *pos,
                "structured loop survived normalization".to_string(),
            ),
            Stmt::If { cond, then_branch, else_branch, .. } => {
                check_no_cps(typed, name, cond, report);
                let then_refs: Vec<&Stmt> = then_branch.iter().collect();
                verify_stmts(typed, name, &then_refs, report);
                if let Some(els) = else_branch {
                    let els_refs: Vec<&Stmt> = els.iter().collect();
                    verify_stmts(typed, name, &els_refs, report);
                }
            }
            Stmt::VarDecl { init: Some(e), .. } => check_no_cps(typed, name, e, report),
            Stmt::Assign { target, value, .. } => {
                if let LValue::Deref { ptr, .. } = target {
                    check_no_cps(typed, name, ptr, report);
                }
                if let LValue::Index { base, .. } = target {
                    check_no_cps(typed, name, base, report);
                }
                if is_cps_call(typed, value) {
                    check_root_call(typed, name, value, report);
                    check_cluster(typed, name, stmts, i, report);
                } else {
                    check_no_cps(typed, name, value, report);
                }
            }
            Stmt::Expr { expr, .. } => {
                if is_cps_call(typed, expr) {
                    check_root_call(typed, name, expr, report);
                    if !cluster_starts_at(typed, stmts, i) {
                        check_cluster(typed, name, stmts, i, report);
                    }
                } else {
                    check_no_cps(typed, name, expr, report);
                }
            }
            Stmt::Return { value: Some(e), .. } => {
                if is_cps_call(typed, e) {
                    check_root_call(typed, name, e, report);
                } else {
                    check_no_cps(typed, name, e, report);
                }
            }
            _ => {}
        }
    }
}

/// Whether the suspendable call at `i` is itself the tail of the cluster
/// started by the statement before it.
fn cluster_starts_at(typed: &TypedProgram, stmts: &[&Stmt], i: usize) -> bool {
    i > 0 && cps_call_stmt(typed, stmts[i - 1])
}

/// The statements after a suspendable call must complete its block.
fn check_cluster(
    typed: &TypedProgram,
    name: &str,
    stmts: &[&Stmt],
    i: usize,
    report: &mut CpsFormReport,
) {
    let assigned = match stmts[i] {
        Stmt::Assign { target: LValue::Var { name, .. }, .. } => Some(name.as_str()),
        _ => None,
    };
    let ok = match stmts.get(i + 1) {
        Some(Stmt::Return { value: None, .. }) => true,
        Some(Stmt::Return { value: Some(e), .. }) => {
            if is_cps_call(typed, e) {
                hole_feed_ok(e, assigned)
            } else {
                matches!((&e.kind, assigned), (ExprKind::Var(n), Some(t)) if n == t)
            }
        }
        Some(Stmt::Expr { expr, .. }) if is_cps_call(typed, expr) => {
            matches!(stmts.get(i + 2), Some(Stmt::Return { value: None, .. }))
                && hole_feed_ok(expr, assigned)
        }
        _ => false,
    };
    if !ok {
        violation(
            report,
            name,
            stmts[i].pos(),
            "suspendable call is not the last action of its block".to_string(),
        );
    }
}

/// The suspended call's value may feed the following tail call only as a
/// whole argument, and only once.
fn hole_feed_ok(tail: &Expr, assigned: Option<&str>) -> bool {
    let Some(t) = assigned else { return true };
    let ExprKind::Call { args, .. } = &tail.kind else { return false };
    let direct = args.iter().filter(|a| matches!(&a.kind, ExprKind::Var(n) if n == t)).count();
    let nested = args
        .iter()
        .filter(|a| !matches!(&a.kind, ExprKind::Var(n) if n == t))
        .any(|a| super::split::mentions_var(a, t));
    direct <= 1 && !nested
}

/// Arguments of a root call may not suspend themselves.
fn check_root_call(typed: &TypedProgram, name: &str, call: &Expr, report: &mut CpsFormReport) {
    if let ExprKind::Call { args, .. } = &call.kind {
        for a in args {
            check_no_cps(typed, name, a, report);
        }
    }
}

fn check_no_cps(typed: &TypedProgram, name: &str, e: &Expr, report: &mut CpsFormReport) {
    if let Some((callee, pos)) = first_cps_inside(typed, e) {
        violation(
            report,
            name,
            pos,
            format!("suspendable call to `{callee}` buried inside an expression"),
        );
    }
}

fn first_cps_inside(typed: &TypedProgram, e: &Expr) -> Option<(String, Pos)> {
    if is_cps_call(typed, e) {
        let ExprKind::Call { callee, .. } = &e.kind else { unreachable!() };
        let name = match &callee.kind {
            ExprKind::Var(n) => n.clone(),
            _ => crate::printer::print_expr(callee),
        };
        return Some((name, e.pos));
    }
    match &e.kind {
        ExprKind::Call { callee, args } => first_cps_inside(typed, callee)
            .or_else(|| args.iter().find_map(|a| first_cps_inside(typed, a))),
        ExprKind::Binary { lhs, rhs, .. } => {
            first_cps_inside(typed, lhs).or_else(|| first_cps_inside(typed, rhs))
        }
        ExprKind::Unary { operand, .. } => first_cps_inside(typed, operand),
        ExprKind::Deref(inner) => first_cps_inside(typed, inner),
        ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
            first_cps_inside(typed, base)
        }
        _ => None,
    }
}

/// Shape of the block's final path: what the last statements do once the
/// straight-line part of the body runs out.
fn final_shape(typed: &TypedProgram, stmts: &[&Stmt]) -> Option<TailShape> {
    let Stmt::Return { value, .. } = stmts.last()? else { return None };
    let prev = stmts.len().checked_sub(2).map(|i| stmts[i]);
    let prev2 = stmts.len().checked_sub(3).map(|i| stmts[i]);
    let prev_cps = prev.is_some_and(|s| cps_call_stmt(typed, s));
    let prev2_cps = prev2.is_some_and(|s| cps_call_stmt(typed, s));
    match value {
        Some(e) if is_cps_call(typed, e) => Some(if prev_cps {
            TailShape::ExternCpsThenTailCall
        } else {
            TailShape::TailCallCps
        }),
        _ => {
            if prev_cps {
                Some(if prev2_cps {
                    TailShape::ExternCpsThenTailCall
                } else {
                    TailShape::TailCallCps
                })
            } else {
                Some(TailShape::PlainReturn)
            }
        }
    }
}

fn violation(report: &mut CpsFormReport, function: &str, pos: Pos, message: String) {
    report.violations.push(Violation {
        function: function.to_string(),
        line: pos.line,
        col: pos.col,
        message,
    });
}
