//! Source-to-source CPS translation of coroutine functions.
//!
//! The pipeline is five independent passes, each producing a program that
//! prints, re-parses, and re-typechecks:
//!
//! 1. boxing: locals whose address is taken move into a heap record, so
//!    their cells survive the stack frame.
//! 2. normalization: structured control flow becomes labels and gotos, and
//!    every call that can yield is hoisted to a statement of its own.
//! 3. splitting: each label opens a new nested function; gotos become tail
//!    calls.
//! 4. lifting: nested functions float to the top level, receiving the
//!    variables they use as parameters.
//! 5. conversion: every coroutine function receives a continuation
//!    parameter and ends by extending or invoking it.

pub mod boxing;
pub mod convert;
pub mod lift;
pub mod normalize;
pub mod split;
pub mod verify;

pub use verify::{verify_cps_form, CpsFormReport, TailShape, Violation};

use crate::ast::{Expr, ExprKind, Pos, Program, Stmt};
use crate::check::{self, Diagnostic, DiagnosticKind};
use crate::error::LangError;
use crate::typeck::{typecheck, CallTarget, TypedProgram};

/// How far to run the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Boxed,
    Normalized,
    Split,
    Lifted,
    Cps,
}

impl Stage {
    pub const ALL: [Stage; 5] =
        [Stage::Boxed, Stage::Normalized, Stage::Split, Stage::Lifted, Stage::Cps];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Boxed => "boxed",
            Stage::Normalized => "normalized",
            Stage::Split => "split",
            Stage::Lifted => "lifted",
            Stage::Cps => "cps",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "boxed" => Ok(Stage::Boxed),
            "normalized" => Ok(Stage::Normalized),
            "split" => Ok(Stage::Split),
            "lifted" => Ok(Stage::Lifted),
            "cps" => Ok(Stage::Cps),
            other => Err(format!("unknown stage `{other}`")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CpsError {
    #[error("{0}")]
    Lang(#[from] LangError),
    #[error("the program has annotation problems; fix them before translating")]
    CheckFailed(Vec<Diagnostic>),
    #[error("{function} at {pos}: branching on in_coroutine() cannot be translated")]
    RefusesHybrid { function: String, pos: Pos },
    #[error("{function} at {pos}: native function calls coroutine `{callee}`")]
    IllegalNativeToCpsCall { function: String, callee: String, pos: Pos },
    #[error("{pos}: {msg}")]
    UnsupportedShape { pos: Pos, msg: String },
}

/// Runs the full pipeline.
pub fn translate(program: &Program) -> Result<Program, CpsError> {
    translate_to(program, Stage::Cps)
}

/// Runs the pipeline up to and including `stage`. Each intermediate program
/// is re-typechecked, so a bug in one pass surfaces at its own doorstep.
pub fn translate_to(program: &Program, stage: Stage) -> Result<Program, CpsError> {
    let mut current = program.clone();
    current.assign_ids();
    let typed = typecheck(current)?;
    gate(&typed)?;

    let mut typed = typed;
    for s in Stage::ALL {
        let next = match s {
            Stage::Boxed => boxing::box_captured_locals(&typed)?,
            Stage::Normalized => normalize::normalize(&typed)?,
            Stage::Split => split::split(&typed)?,
            Stage::Lifted => lift::lift(&typed)?,
            Stage::Cps => convert::convert(&typed)?,
        };
        typed = typecheck(next)?;
        if s == stage {
            break;
        }
    }
    Ok(typed.program)
}

/// Translation preconditions: the annotations the passes rely on must hold,
/// and context-dependent control flow cannot be compiled to a single form.
fn gate(typed: &TypedProgram) -> Result<(), CpsError> {
    let report = check::check(typed);
    let blockers: Vec<Diagnostic> = report
        .diagnostics
        .iter()
        .filter(|d| {
            matches!(
                d.kind,
                DiagnosticKind::MissingCoroutine
                    | DiagnosticKind::WrongBlocking
                    | DiagnosticKind::AnnotationLoss
            )
        })
        .cloned()
        .collect();
    if !blockers.is_empty() {
        return Err(CpsError::CheckFailed(blockers));
    }

    for f in typed.program.functions() {
        let Some(body) = &f.body else { continue };
        if let Some(pos) = find_nested_def(body) {
            return Err(CpsError::UnsupportedShape {
                pos,
                msg: "nested function definitions are not accepted as input".to_string(),
            });
        }
        if f.annotation.is_coroutine() {
            if let Some(pos) = find_hybrid_condition(typed, body) {
                return Err(CpsError::RefusesHybrid { function: f.name.clone(), pos });
            }
        }
    }
    Ok(())
}

fn find_nested_def(body: &[Stmt]) -> Option<Pos> {
    for stmt in body {
        match stmt {
            Stmt::FuncDef(f) => return Some(f.pos),
            Stmt::If { then_branch, else_branch, .. } => {
                if let Some(pos) = find_nested_def(then_branch) {
                    return Some(pos);
                }
                if let Some(els) = else_branch {
                    if let Some(pos) = find_nested_def(els) {
                        return Some(pos);
                    }
                }
            }
            Stmt::While { body, .. } => {
                if let Some(pos) = find_nested_def(body) {
                    return Some(pos);
                }
            }
            _ => {}
        }
    }
    None
}

fn find_hybrid_condition(typed: &TypedProgram, body: &[Stmt]) -> Option<Pos> {
    for stmt in body {
        match stmt {
            Stmt::If { cond, then_branch, else_branch, .. } => {
                if let Some(pos) = find_in_coroutine_call(typed, cond) {
                    return Some(pos);
                }
                if let Some(pos) = find_hybrid_condition(typed, then_branch) {
                    return Some(pos);
                }
                if let Some(els) = else_branch {
                    if let Some(pos) = find_hybrid_condition(typed, els) {
                        return Some(pos);
                    }
                }
            }
            Stmt::While { cond, body, .. } => {
                if let Some(pos) = find_in_coroutine_call(typed, cond) {
                    return Some(pos);
                }
                if let Some(pos) = find_hybrid_condition(typed, body) {
                    return Some(pos);
                }
            }
            _ => {}
        }
    }
    None
}

fn find_in_coroutine_call(typed: &TypedProgram, e: &Expr) -> Option<Pos> {
    if let ExprKind::Call { .. } = &e.kind {
        if let Some(CallTarget::Direct { name, builtin: true }) = typed.call_targets.get(&e.id) {
            if name == "in_coroutine" {
                return Some(e.pos);
            }
        }
    }
    match &e.kind {
        ExprKind::Call { callee, args } => {
            if let Some(pos) = find_in_coroutine_call(typed, callee) {
                return Some(pos);
            }
            args.iter().find_map(|a| find_in_coroutine_call(typed, a))
        }
        ExprKind::Binary { lhs, rhs, .. } => find_in_coroutine_call(typed, lhs)
            .or_else(|| find_in_coroutine_call(typed, rhs)),
        ExprKind::Unary { operand, .. } => find_in_coroutine_call(typed, operand),
        ExprKind::Deref(inner) => find_in_coroutine_call(typed, inner),
        ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
            find_in_coroutine_call(typed, base)
        }
        ExprKind::Push { args, cont, .. } => args
            .iter()
            .find_map(|a| find_in_coroutine_call(typed, a))
            .or_else(|| find_in_coroutine_call(typed, cont)),
        _ => None,
    }
}

/// Whether this call can suspend: its callee is a coroutine that takes its
/// continuation explicitly. Context-probing primitives (`need_cont`) receive
/// the continuation but run to completion like ordinary calls.
pub(crate) fn is_cps_call(typed: &TypedProgram, e: &Expr) -> bool {
    let ExprKind::Call { callee, .. } = &e.kind else { return false };
    match typed.expr_types.get(&callee.id) {
        Some(crate::ast::Type::Fun(ft)) => {
            ft.annotation.is_coroutine() && !ft.annotation.need_cont
        }
        _ => false,
    }
}

/// Whether the expression contains a suspendable call anywhere inside.
pub(crate) fn contains_cps_call(typed: &TypedProgram, e: &Expr) -> bool {
    if is_cps_call(typed, e) {
        return true;
    }
    match &e.kind {
        ExprKind::Call { callee, args } => {
            contains_cps_call(typed, callee) || args.iter().any(|a| contains_cps_call(typed, a))
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            contains_cps_call(typed, lhs) || contains_cps_call(typed, rhs)
        }
        ExprKind::Unary { operand, .. } => contains_cps_call(typed, operand),
        ExprKind::Deref(inner) => contains_cps_call(typed, inner),
        ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
            contains_cps_call(typed, base)
        }
        ExprKind::Push { args, cont, .. } => {
            args.iter().any(|a| contains_cps_call(typed, a)) || contains_cps_call(typed, cont)
        }
        _ => false,
    }
}

/// A statement whose effect is a single suspendable call: either the call
/// alone or its assignment into a variable.
pub(crate) fn cps_call_stmt(typed: &TypedProgram, stmt: &Stmt) -> bool {
    match stmt {
        Stmt::Expr { expr, .. } => is_cps_call(typed, expr),
        Stmt::Assign { value, .. } => is_cps_call(typed, value),
        _ => false,
    }
}
