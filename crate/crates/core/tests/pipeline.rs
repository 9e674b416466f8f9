//! End-to-end tests for the translation pipeline: stage goldens for the
//! countdown program, re-typechecking of every stage's printed output, a
//! free-variable audit after lifting, block shape classification, and the
//! inputs the translator must refuse.

use coroc_core::ast::{Annotation, Expr, ExprKind, Function, LValue, Program, Stmt, Type};
use coroc_core::cps::{self, CpsError, Stage, TailShape};
use coroc_core::{parse_program, parse_program_with, print_program, typecheck, ParseOptions};

mod common;
use common::{BOXED_PARAM, CORPUS, COUNTDOWN, GLOBAL_ORDER, STORE_TARGET, SUSPEND_RESULT};


#[test]
fn normalization_pins_suspension_inside_assignment_targets() {
    let normalized = translate_stage(STORE_TARGET, Stage::Normalized);
    let pinned_call = normalized.find("= co_slot();").expect("call pinned");
    let pinned_alloc = normalized.find("= alloc(__cpc_t0);").expect("alloc pinned");
    assert!(pinned_call < pinned_alloc, "{normalized}");
    assert!(normalized.contains("*__cpc_t1 = n;"), "{normalized}");
}

fn translate_stage(src: &str, stage: Stage) -> String {
    let program = parse_program(src).expect("parse");
    let out = cps::translate_to(&program, stage).expect("translate");
    print_program(&out)
}

#[test]
fn countdown_boxed_and_normalized_are_stable() {
    let original = print_program(&parse_program(COUNTDOWN).unwrap());
    assert_eq!(translate_stage(COUNTDOWN, Stage::Boxed), original);
    assert_eq!(translate_stage(COUNTDOWN, Stage::Normalized), original);
}

#[test]
fn countdown_split_golden() {
    let expected = include_str!("../../../corpus/golden/countdown.split.mc");
    assert_eq!(translate_stage(COUNTDOWN, Stage::Split), expected);
}

#[test]
fn countdown_lifted_golden() {
    let expected = include_str!("../../../corpus/golden/countdown.lifted.mc");
    assert_eq!(translate_stage(COUNTDOWN, Stage::Lifted), expected);
}

#[test]
fn countdown_cps_golden() {
    let expected = include_str!("../../../corpus/golden/countdown.cps.mc");
    assert_eq!(translate_stage(COUNTDOWN, Stage::Cps), expected);
}

#[test]
fn every_stage_output_reparses_and_retypechecks() {
    for (name, src) in CORPUS {
        for stage in Stage::ALL {
            let printed = translate_stage(src, stage);
            let reparsed = parse_program_with(&printed, &ParseOptions::internal())
                .unwrap_or_else(|e| panic!("{name}/{}: reparse failed: {e}", stage.name()));
            typecheck(reparsed.clone())
                .unwrap_or_else(|e| panic!("{name}/{}: retypecheck failed: {e}", stage.name()));
            let reprinted = print_program(&reparsed);
            assert_eq!(printed, reprinted, "{name}/{}: printer unstable", stage.name());
        }
    }
}

/// Independent free-variable scan: every name a function body mentions must
/// be bound by its own parameters or declarations, or visible at top level.
fn free_variables(f: &Function, top_level: &[String]) -> Vec<String> {
    let mut bound: Vec<String> = top_level.to_vec();
    bound.extend(f.params.iter().filter_map(|p| p.name.clone()));
    collect_bound(f.body.as_deref().unwrap_or(&[]), &mut bound);
    let mut free = Vec::new();
    scan_stmts(f.body.as_deref().unwrap_or(&[]), &bound, &mut free);
    free
}

fn collect_bound(stmts: &[Stmt], bound: &mut Vec<String>) {
    for stmt in stmts {
        match stmt {
            Stmt::VarDecl { name, .. } => bound.push(name.clone()),
            Stmt::If { then_branch, else_branch, .. } => {
                collect_bound(then_branch, bound);
                if let Some(els) = else_branch {
                    collect_bound(els, bound);
                }
            }
            Stmt::While { body, .. } => collect_bound(body, bound),
            _ => {}
        }
    }
}

fn scan_stmts(stmts: &[Stmt], bound: &[String], free: &mut Vec<String>) {
    for stmt in stmts {
        match stmt {
            Stmt::VarDecl { init: Some(e), .. } => scan_expr(e, bound, free),
            Stmt::Assign { target, value, .. } => {
                match target {
                    LValue::Var { name, .. } => {
                        if !bound.contains(name) {
                            free.push(name.clone());
                        }
                    }
                    LValue::Deref { ptr, .. } => scan_expr(ptr, bound, free),
                    LValue::Index { base, .. } => scan_expr(base, bound, free),
                }
                scan_expr(value, bound, free);
            }
            Stmt::Expr { expr, .. } => scan_expr(expr, bound, free),
            Stmt::If { cond, then_branch, else_branch, .. } => {
                scan_expr(cond, bound, free);
                scan_stmts(then_branch, bound, free);
                if let Some(els) = else_branch {
                    scan_stmts(els, bound, free);
                }
            }
            Stmt::While { cond, body, .. } => {
                scan_expr(cond, bound, free);
                scan_stmts(body, bound, free);
            }
            Stmt::Return { value: Some(e), .. } => scan_expr(e, bound, free),
            Stmt::Invoke { cont, value, .. } => {
                scan_expr(cont, bound, free);
                if let Some(e) = value {
                    scan_expr(e, bound, free);
                }
            }
            _ => {}
        }
    }
}

fn scan_expr(e: &Expr, bound: &[String], free: &mut Vec<String>) {
    match &e.kind {
        ExprKind::Var(n) | ExprKind::AddrOf(n) => {
            if !bound.contains(n) {
                free.push(n.clone());
            }
        }
        ExprKind::Call { callee, args } => {
            scan_expr(callee, bound, free);
            for a in args {
                scan_expr(a, bound, free);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            scan_expr(lhs, bound, free);
            scan_expr(rhs, bound, free);
        }
        ExprKind::Unary { operand, .. } => scan_expr(operand, bound, free),
        ExprKind::Deref(inner) => scan_expr(inner, bound, free),
        ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
            scan_expr(base, bound, free)
        }
        ExprKind::Push { func, args, cont, .. } => {
            if !bound.contains(func) {
                free.push(func.clone());
            }
            for a in args {
                scan_expr(a, bound, free);
            }
            scan_expr(cont, bound, free);
        }
        ExprKind::IntLit(_) | ExprKind::Hole => {}
    }
}

fn top_level_names(program: &Program) -> Vec<String> {
    let mut names: Vec<String> = program.functions().map(|f| f.name.clone()).collect();
    names.extend(program.globals().map(|g| g.name.clone()));
    names.extend(coroc_core::builtins::builtin_table().iter().map(|b| b.name.to_string()));
    names
}

#[test]
fn lifted_and_converted_functions_have_no_free_variables() {
    for (name, src) in CORPUS {
        for stage in [Stage::Lifted, Stage::Cps] {
            let program = parse_program(src).unwrap();
            let out = cps::translate_to(&program, stage).unwrap();
            let top = top_level_names(&out);
            for f in out.functions().filter(|f| f.is_defined()) {
                let free = free_variables(f, &top);
                assert!(
                    free.is_empty(),
                    "{name}/{}: `{}` mentions unbound names {free:?}",
                    stage.name(),
                    f.name
                );
            }
        }
    }
}

#[test]
fn split_stage_blocks_classify_cleanly() {
    for (name, src) in CORPUS {
        for stage in [Stage::Split, Stage::Lifted] {
            let program = parse_program(src).unwrap();
            let out = cps::translate_to(&program, stage).unwrap();
            let typed = typecheck(out).unwrap();
            let report = cps::verify_cps_form(&typed);
            assert!(
                report.is_ok(),
                "{name}/{}: violations: {:?}",
                stage.name(),
                report.violations
            );
            assert!(!report.shapes.is_empty(), "{name}: no coroutine functions classified");
        }
    }
}

#[test]
fn countdown_split_shapes() {
    let program = parse_program(COUNTDOWN).unwrap();
    let out = cps::translate_to(&program, Stage::Split).unwrap();
    let typed = typecheck(out).unwrap();
    let report = cps::verify_cps_form(&typed);
    assert!(report.is_ok(), "{:?}", report.violations);
    assert_eq!(report.shapes["countdown"], TailShape::TailCallCps);
    assert_eq!(report.shapes["loop"], TailShape::ExternCpsThenTailCall);
    assert_eq!(report.shapes["timeout"], TailShape::PlainReturn);
}

#[test]
fn verifier_flags_buried_suspendable_calls() {
    let src = "coroutine_fn int co_get() { co_yield(); return 1; }\n\
               coroutine_fn void f() { print(co_get()); }\n\
               void main() { }";
    let typed = typecheck(parse_program(src).unwrap()).unwrap();
    let report = cps::verify_cps_form(&typed);
    assert!(!report.is_ok());
    assert!(report.violations.iter().any(|v| v.message.contains("buried")), "{report:?}");
}

#[test]
fn boxing_moves_address_taken_locals_into_a_cell_block() {
    let boxed = translate_stage(BOXED_PARAM, Stage::Boxed);
    assert!(boxed.contains("int *__cpc_env = alloc(1);"), "{boxed}");
    assert!(boxed.contains("__cpc_env[0] = n;"), "{boxed}");
    assert!(boxed.contains("bump(&__cpc_env[0]);"), "{boxed}");
    assert!(boxed.contains("print(__cpc_env[0]);"), "{boxed}");
    assert!(!boxed.contains("&n"), "{boxed}");
}

#[test]
fn boxing_leaves_native_functions_alone() {
    let boxed = translate_stage(BOXED_PARAM, Stage::Boxed);
    assert!(boxed.contains("*p = *p + 1;"), "{boxed}");
}

#[test]
fn normalization_pins_reads_around_suspension_in_source_order() {
    let normalized = translate_stage(GLOBAL_ORDER, Stage::Normalized);
    let first_read = normalized.find("= total;").expect("global read pinned");
    let first_call = normalized.find("= co_add(n);").expect("call pinned");
    assert!(first_read < first_call, "{normalized}");
}

#[test]
fn converted_output_carries_result_through_frame_slot() {
    let cps_out = translate_stage(SUSPEND_RESULT, Stage::Cps);
    assert!(cps_out.contains("push_ret("), "{cps_out}");
    assert!(cps_out.contains("?"), "{cps_out}");
}

#[test]
fn converted_output_extends_continuation_before_suspending() {
    let cps_out = translate_stage(COUNTDOWN, Stage::Cps);
    assert!(cps_out.contains("co_sleep(1, push(__cpc_countdown_loop, n, k));"), "{cps_out}");
    assert!(cps_out.contains("invoke(k);"), "{cps_out}");
}

#[test]
fn translation_refuses_unannotated_suspension() {
    let src = "coroutine_fn void co(void) { co_yield(); }\n\
               void f(void) { co(); }\n\
               void main() { }";
    let program = parse_program(src).unwrap();
    match cps::translate(&program) {
        Err(CpsError::CheckFailed(diags)) => {
            assert!(!diags.is_empty());
        }
        other => panic!("expected check failure, got {other:?}"),
    }
}

#[test]
fn inference_catches_suspension_through_pointer_in_plain_function() {
    let src = "coroutine_fn void co(int n) { co_yield(); }\n\
               coroutine_fn void (*p)(int) = &co;\n\
               void plain(int n) { (*p)(n); }\n\
               void main() { }";
    let program = parse_program(src).unwrap();
    match cps::translate(&program) {
        Err(CpsError::CheckFailed(diags)) => {
            assert!(diags.iter().any(|d| d.subject == "plain"), "{diags:?}");
        }
        other => panic!("expected check failure, got {other:?}"),
    }
}

#[test]
fn conversion_guards_against_suspension_in_plain_functions() {
    let src = "coroutine_fn void co(int n) { co_yield(); }\n\
               coroutine_fn void (*p)(int) = &co;\n\
               void plain(int n) { (*p)(n); }\n\
               void main() { }";
    let typed = typecheck(parse_program(src).unwrap()).unwrap();
    match cps::convert::convert(&typed) {
        Err(CpsError::IllegalNativeToCpsCall { function, callee, .. }) => {
            assert_eq!(function, "plain");
            assert_eq!(callee, "*p");
        }
        other => panic!("expected illegal call error, got {other:?}"),
    }
}

#[test]
fn translation_refuses_context_probing_branches() {
    let src = "coroutine_fn void f(void) { if (in_coroutine()) { co_yield(); } }\n\
               void main() { }";
    let program = parse_program(src).unwrap();
    match cps::translate(&program) {
        Err(CpsError::RefusesHybrid { function, .. }) => assert_eq!(function, "f"),
        other => panic!("expected hybrid refusal, got {other:?}"),
    }
}

#[test]
fn translation_refuses_nested_function_definitions_in_input() {
    let mut program =
        parse_program("coroutine_fn void f(void) { co_yield(); }\nvoid main() { }").unwrap();
    let nested = Function {
        name: "inner".to_string(),
        annotation: Annotation::NATIVE,
        ret: Type::Void,
        params: Vec::new(),
        body: Some(Vec::new()),
        pos: Default::default(),
    };
    program.functions_mut().next().unwrap().body.as_mut().unwrap().push(Stmt::FuncDef(nested));
    match cps::translate(&program) {
        Err(CpsError::UnsupportedShape { .. }) => {}
        other => panic!("expected shape refusal, got {other:?}"),
    }
}

#[test]
#[ignore]
fn dump_corpus_cps() {
    for (name, src) in CORPUS {
        println!("===== {name} =====");
        println!("{}", translate_stage(src, Stage::Cps));
    }
}
